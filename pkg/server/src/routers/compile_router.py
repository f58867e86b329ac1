import logging

from fastapi import APIRouter, HTTPException
from pydantic import BaseModel

from src.errors import DefectError
from src.models import CompileReport
from src.universal_compiler import DEFAULT_CAP, compile_report

logger = logging.getLogger(__name__)

compile_router = APIRouter(tags=["Universal scheme compiler"])

_branch_cap = DEFAULT_CAP


def initialize_router_compile(branch_cap: int):
    """Set the simulated-qubit cap for verification"""
    global _branch_cap
    _branch_cap = branch_cap


class CompileRequest(BaseModel):
    n: int
    gate: str
    verify: bool = True


@compile_router.post("", response_model=CompileReport)
def compile_gate(request: CompileRequest):
    """Compile gates for the N-qubit register and verify every branch"""
    try:
        return compile_report(request.n, request.gate, run_verify=request.verify, cap=_branch_cap)
    except DefectError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.error(f"Error compiling {request.gate}: {e}")
        raise HTTPException(status_code=500, detail=str(e))
