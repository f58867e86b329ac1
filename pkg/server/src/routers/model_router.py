import logging
from typing import Optional

from fastapi import APIRouter, HTTPException
from pydantic import BaseModel

from src.anyon_model import builtin_model, builtin_models, model_check
from src.errors import DefectError
from src.models import ModelCheckReport, ModelSpec

logger = logging.getLogger(__name__)

model_router = APIRouter(tags=["Excitation models"])


class ModelCheckRequest(BaseModel):
    builtin: Optional[str] = None
    model: Optional[ModelSpec] = None
    wall: Optional[str] = None


@model_router.get("")
async def list_models():
    """Names of the built-in models"""
    return {"models": builtin_models()}


@model_router.post("/check", response_model=ModelCheckReport)
def check_model(request: ModelCheckRequest):
    """Validate a model and test one of its walls for Clifford twists"""
    try:
        if request.model is not None:
            spec = request.model
        elif request.builtin is not None:
            spec = builtin_model(request.builtin).to_spec()
        else:
            raise HTTPException(status_code=400, detail="give either 'builtin' or 'model'")
        return model_check(spec, request.wall)
    except HTTPException:
        raise
    except DefectError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.error(f"Error checking model: {e}")
        raise HTTPException(status_code=500, detail=str(e))
