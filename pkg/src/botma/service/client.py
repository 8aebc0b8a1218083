"""Backends the CLI talks to: in-process handlers or a running service."""
from __future__ import annotations

import httpx
from pydantic import BaseModel

from . import handlers, schemas


class ServiceError(RuntimeError):
    def __init__(self, message: str, validation: bool):
        super().__init__(message)
        self.validation = validation


class LocalBackend:
    """Calls the request handlers directly, without a network hop."""

    def call(self, route: str, request: BaseModel | None = None, /, **params):
        fn = getattr(handlers, route)
        try:
            return fn(request, **params) if request is not None else fn(**params)
        except handlers.RequestError as exc:
            raise ServiceError(str(exc), validation=True) from None


_ROUTES = {
    "simulate": ("POST", "/simulate", schemas.SimulateResponse),
    "solve": ("POST", "/solve", schemas.SolveResponse),
    "monte_carlo": ("POST", "/mc", schemas.MonteCarloResponse),
    "sweep": ("POST", "/sweep", schemas.SweepResponse),
    "compare": ("POST", "/compare", schemas.CompareResponse),
    "presets": ("GET", "/presets", schemas.PresetList),
    "preset": ("GET", "/presets/{name}", schemas.ScenarioModel),
    "health": ("GET", "/health", schemas.Health),
}


class HttpBackend:
    def __init__(self, base_url: str, timeout: float | None = None, transport=None):
        self.client = httpx.Client(base_url=base_url, timeout=timeout, transport=transport)

    def call(self, route: str, request: BaseModel | None = None, /, **params):
        method, path, model = _ROUTES[route]
        if "{name}" in path:
            path = path.format(name=params.pop("name"))
        if route == "solve" and params.pop("keep_volume", False):
            params["volume"] = "true"
        body = request.model_dump(mode="json", exclude_none=True) if request is not None else None
        try:
            resp = self.client.request(method, path, json=body, params=params or None)
        except httpx.HTTPError as exc:
            raise ServiceError(f"service unreachable: {exc}", validation=False) from None
        if resp.status_code >= 400:
            try:
                detail = resp.json().get("detail", resp.text)
            except ValueError:
                detail = resp.text
            raise ServiceError(str(detail), validation=400 <= resp.status_code < 500)
        return model.model_validate(resp.json())
