import logging
from typing import Optional

from fastapi import APIRouter, HTTPException
from pydantic import BaseModel, Field

from src.deformation import run_braid_spec
from src.errors import DefectError
from src.lattice_code import lattice_report, planar_patch
from src.models import BraidSpec, DeformReport, LatticeReport, LatticeSpec

logger = logging.getLogger(__name__)

lattice_router = APIRouter(tags=["Surface code lattices"])

_distance_floor = 2


def initialize_router_lattice(distance_floor: int):
    """Set the distance floor applied to braids that do not declare one"""
    global _distance_floor
    _distance_floor = distance_floor


class LatticeBuildRequest(BaseModel):
    lattice: Optional[LatticeSpec] = None
    size: Optional[int] = Field(None, ge=2)
    max_weight: Optional[int] = Field(None, ge=0)


@lattice_router.post("/build", response_model=LatticeReport)
def build_lattice(request: LatticeBuildRequest):
    """Stabilisers, logicals and (optionally) the distance of a lattice"""
    try:
        if request.lattice is not None:
            spec = request.lattice
        elif request.size is not None:
            spec = planar_patch(request.size)
        else:
            raise HTTPException(status_code=400, detail="give either 'lattice' or 'size'")
        return lattice_report(spec, max_weight=request.max_weight)
    except HTTPException:
        raise
    except DefectError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.error(f"Error building lattice: {e}")
        raise HTTPException(status_code=500, detail=str(e))


@lattice_router.post("/deform", response_model=DeformReport)
def deform(spec: BraidSpec):
    """Run a hole braid by code deformation"""
    try:
        if spec.distance_floor is None:
            spec = spec.model_copy(update={"distance_floor": _distance_floor})
        return run_braid_spec(spec)
    except DefectError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.error(f"Error running braid: {e}")
        raise HTTPException(status_code=500, detail=str(e))
