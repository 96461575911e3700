"""Thin client for the scheduling service.

By default the service app runs in-process (no server needed); pass a base URL
to talk to a remote deployment instead.
"""

from __future__ import annotations

import httpx

from .service.schemas import (
    GenerateRequest,
    GenerateResponse,
    SolveReport,
    SolveRequest,
    VerifyRequest,
    VerifyResponse,
)


class ServiceError(RuntimeError):
    def __init__(self, status_code: int, detail: str):
        super().__init__(f"service returned {status_code}: {detail}")
        self.status_code = status_code
        self.detail = detail


class ServiceClient:
    def __init__(self, base_url: str | None = None, timeout: float = 3600.0):
        if base_url is None:
            from fastapi.testclient import TestClient

            from .service.app import app

            self._client: httpx.Client = TestClient(app)
        else:
            self._client = httpx.Client(base_url=base_url, timeout=timeout)

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "ServiceClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _post(self, path: str, payload: dict) -> dict:
        resp = self._client.post(path, json=payload)
        if resp.status_code != 200:
            try:
                detail = resp.json().get("detail", resp.text)
            except ValueError:
                detail = resp.text
            raise ServiceError(resp.status_code, str(detail))
        return resp.json()

    def generate(self, req: GenerateRequest) -> GenerateResponse:
        return GenerateResponse.model_validate(self._post("/generate", req.model_dump()))

    def solve(self, req: SolveRequest) -> SolveReport:
        return SolveReport.model_validate(self._post("/solve", req.model_dump()))

    def verify(self, req: VerifyRequest) -> VerifyResponse:
        return VerifyResponse.model_validate(self._post("/verify", req.model_dump()))
