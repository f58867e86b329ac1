import logging
from typing import Optional

from fastapi import APIRouter, HTTPException
from pydantic import BaseModel, Field

from src.defect_scheme import builtin_scheme, builtin_schemes, scheme_report, setup_from_spec
from src.errors import DefectError
from src.models import SchemeReport, SchemeSpec

logger = logging.getLogger(__name__)

scheme_router = APIRouter(tags=["Defect schemes"])

_bound = 10_000


def initialize_router_scheme(bound: int):
    """Set the group-enumeration bound used when a request gives none"""
    global _bound
    _bound = bound


class SchemeBraidRequest(BaseModel):
    builtin: Optional[str] = None
    scheme: Optional[SchemeSpec] = None
    bound: Optional[int] = Field(None, gt=0)


@scheme_router.get("")
async def list_schemes():
    return {"schemes": builtin_schemes()}


@scheme_router.post("/braid", response_model=SchemeReport)
def braid_scheme(request: SchemeBraidRequest):
    """Logical action of every declared move and the group they generate"""
    try:
        if request.scheme is not None:
            setup = setup_from_spec(request.scheme)
        elif request.builtin is not None:
            setup = builtin_scheme(request.builtin)
        else:
            raise HTTPException(status_code=400, detail="give either 'builtin' or 'scheme'")
        return scheme_report(setup, bound=request.bound or _bound)
    except HTTPException:
        raise
    except DefectError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.error(f"Error braiding scheme: {e}")
        raise HTTPException(status_code=500, detail=str(e))
