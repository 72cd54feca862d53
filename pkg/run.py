#!/usr/bin/env python
"""
Startup script for the PBFT performance API.

Runs app:app under uvicorn. Simulations are CPU bound, so the worker count
defaults to the number of cores (capped at 4) unless reload is enabled.
"""

import argparse
import multiprocessing
import platform

import uvicorn

from core import settings


def main():
    """Run the FastAPI application under uvicorn."""
    parser = argparse.ArgumentParser(description="Run the PBFT performance API")
    parser.add_argument("--debug", action="store_true", help="Enable debug logging and access log")
    parser.add_argument("--reload", action="store_true", help="Enable auto-reload")
    parser.add_argument("--port", type=int, default=settings.API_PORT, help="Port to run the server on")
    parser.add_argument("--workers", type=int, default=0, help="Number of worker processes (0 for auto-detection)")
    args = parser.parse_args()

    workers = args.workers
    if workers <= 0:
        workers = min(multiprocessing.cpu_count(), 4)

    uvicorn_config = {
        "app": "app:app",
        "host": "0.0.0.0",
        "port": args.port,
        "log_level": "debug" if args.debug else settings.LOG_LEVEL.lower(),
        "workers": 1 if args.reload else workers,
        "reload": args.reload,
        "loop": "uvloop" if platform.system() != "Windows" else "asyncio",
        "access_log": args.debug,
    }

    print(f"Starting server with {uvicorn_config['workers']} worker(s)")
    print(f"Visit: http://localhost:{args.port}/docs")

    uvicorn.run(**uvicorn_config)


if __name__ == "__main__":
    main()
