"""Scenario scripts: ordered API calls, time advances and assertions.

A script is JSON lines; each step is one of
  {"api": {"method", "path", "body"?, "headers"?}, "save_as"?, "expect_status"?}
  {"advance": <sim seconds>}
  {"assert": {"path", "pointer"?, "equals"? | "equals_saved"?}}
Strings anywhere in a step may reference saved responses as
"${name:/json/pointer}"; a string that is exactly one placeholder is
replaced by the raw value. Steps run strictly in order and the first
failure aborts the run with its step index.
"""

from __future__ import annotations

import json
import re
from pathlib import Path
from typing import Any

from ..errors import ScenarioStepFailed

_PLACEHOLDER = re.compile(r"\$\{([^}:]+):([^}]*)\}")


def _pointer(value: Any, pointer: str) -> Any:
    if pointer in ("", "/"):
        return value
    current = value
    for token in pointer.strip("/").split("/"):
        if isinstance(current, list):
            current = current[int(token)]
        else:
            current = current[token]
    return current


def _substitute(value: Any, saved: dict[str, Any]) -> Any:
    if isinstance(value, str):
        full = _PLACEHOLDER.fullmatch(value)
        if full:
            name, pointer = full.group(1), full.group(2)
            return _pointer(saved[name], pointer)
        return _PLACEHOLDER.sub(lambda m: str(_pointer(saved[m.group(1)], m.group(2))), value)
    if isinstance(value, list):
        return [_substitute(v, saved) for v in value]
    if isinstance(value, dict):
        return {k: _substitute(v, saved) for k, v in value.items()}
    return value


def parse_script(text: str) -> list[dict]:
    steps = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        steps.append(json.loads(line))
    return steps


def load_script(path: str | Path) -> list[dict]:
    return parse_script(Path(path).read_text(encoding="utf-8"))


def run_scenario(steps: list[dict], client, raise_on_failure: bool = False) -> dict:
    """Execute against an HTTP client exposing .request(method, url, ...).
    Returns a report with one entry per executed step and the deterministic
    event-log hash at the end of the run."""
    saved: dict[str, Any] = {}
    report: list[dict] = []
    ok = True

    for index, step in enumerate(steps):
        detail = ""
        passed = True
        try:
            if "advance" in step:
                response = client.request("POST", "/sim/advance", json={"dt": step["advance"]})
                passed = response.status_code == 200
                detail = f"advance {step['advance']} -> now {response.json().get('now')}"
            elif "api" in step:
                call = _substitute(step["api"], saved)
                response = client.request(
                    call["method"], call["path"],
                    json=call.get("body"), headers=call.get("headers"),
                )
                expected = step.get("expect_status")
                if expected is not None and response.status_code != expected:
                    passed = False
                    detail = f"{call['method']} {call['path']} -> {response.status_code}, expected {expected}: {response.text[:200]}"
                else:
                    detail = f"{call['method']} {call['path']} -> {response.status_code}"
                    if response.status_code >= 400 and expected is None:
                        passed = False
                        detail += f": {response.text[:200]}"
                if "save_as" in step and passed:
                    saved[step["save_as"]] = response.json()
            elif "assert" in step:
                spec = _substitute(step["assert"], saved)
                response = client.request("GET", spec["path"])
                value = _pointer(response.json(), spec.get("pointer", ""))
                if "equals_saved" in spec:
                    expected_value = _pointer(saved[spec["equals_saved"]], spec.get("saved_pointer", spec.get("pointer", "")))
                else:
                    expected_value = spec["equals"]
                passed = value == expected_value
                detail = f"GET {spec['path']}{spec.get('pointer', '')}: {value!r} == {expected_value!r}"
            else:
                passed = False
                detail = f"unknown step shape: {sorted(step)}"
        except Exception as exc:  # noqa: BLE001 - report the failing step, whatever broke
            passed = False
            detail = f"{type(exc).__name__}: {exc}"

        report.append({"index": index, "ok": passed, "detail": detail})
        if not passed:
            ok = False
            break

    log_hash = ""
    try:
        log_hash = client.request("GET", "/sim/events", params={"cursor": 0}).json()["log_hash"]
    except Exception:  # noqa: BLE001
        pass

    result = {"ok": ok, "steps": report, "log_hash": log_hash}
    if not ok and raise_on_failure:
        failed = report[-1]
        raise ScenarioStepFailed(failed["index"], failed["detail"])
    return result
