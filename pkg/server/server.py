import uvicorn
from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from src.models import RunConfig
from src.routers.compile_router import compile_router, initialize_router_compile
from src.routers.lattice_router import initialize_router_lattice, lattice_router
from src.routers.model_router import model_router
from src.routers.scheme_router import initialize_router_scheme, scheme_router
from src.utils import setup_logging


def create_app(config: RunConfig | None = None) -> FastAPI:
    """Build the API with every router configured from ``config``"""
    config = config or RunConfig(subcommand="serve")
    app = FastAPI(title="Defect braiding toolkit")

    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_credentials=True,
        allow_methods=["*"],
        allow_headers=["*"],
    )

    initialize_router_scheme(config.bound)
    initialize_router_lattice(config.distance_floor)
    initialize_router_compile(config.branch_cap)

    app.include_router(model_router, prefix="/models")
    app.include_router(scheme_router, prefix="/schemes")
    app.include_router(lattice_router, prefix="/lattice")
    app.include_router(compile_router, prefix="/compile")

    @app.get("/health")
    async def health():
        return {"status": "ok"}

    return app


app = create_app()


def serve(config: RunConfig, host: str = "0.0.0.0", port: int = 8000):
    uvicorn.run(create_app(config), host=host, port=port)


if __name__ == "__main__":
    setup_logging()
    serve(RunConfig(subcommand="serve"))
