import json
import logging
from pathlib import Path
from typing import Type, TypeVar

from pydantic import BaseModel, ValidationError

from src.errors import ParseError

DATA_DIR = Path(__file__).resolve().parent.parent / "data"
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

logger = logging.getLogger(__name__)

T = TypeVar("T", bound=BaseModel)


def setup_logging(level: int = logging.INFO) -> None:
    """Configure root logging with the service-wide format."""
    logging.basicConfig(level=level, format=LOG_FORMAT, force=True)


def load_document(path: str | Path) -> dict:
    """Read a declarative JSON document, reporting syntax errors with line numbers."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e}") from e
    return parse_document(text, source=str(path))


def parse_document(text: str, source: str = "<input>") -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{source}: {e.msg}", line=e.lineno) from e
    if not isinstance(data, dict):
        raise ParseError(f"{source}: top level must be an object", line=1)
    return data


def validate_document(data: dict, schema: Type[T], source: str = "<input>") -> T:
    try:
        return schema.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(part) for part in first["loc"])
        raise ParseError(f"{source}: {where}: {first['msg']}") from e


def load_spec(path: str | Path, schema: Type[T]) -> T:
    return validate_document(load_document(path), schema, source=str(path))


def builtin_path(kind: str, name: str) -> Path:
    path = DATA_DIR / kind / f"{name}.json"
    if not path.exists():
        available = sorted(p.stem for p in (DATA_DIR / kind).glob("*.json"))
        raise ParseError(f"unknown built-in {kind[:-1]} {name!r}; available: {available}")
    return path


def list_builtins(kind: str) -> list[str]:
    return sorted(p.stem for p in (DATA_DIR / kind).glob("*.json"))


def write_output(text: str, out: str | None) -> None:
    if out is None:
        print(text)
        return
    Path(out).write_text(text + "\n")
    logger.info(f"Report written to {out}")
