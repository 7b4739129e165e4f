"""Run the service under uvicorn with environment-derived settings."""

import uvicorn

from .app import create_app
from .config import ServiceConfig


def main() -> None:
    config = ServiceConfig.from_env()
    uvicorn.run(create_app(config), host="127.0.0.1", port=config.port)


if __name__ == "__main__":
    main()
