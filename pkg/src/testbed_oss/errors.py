"""Error taxonomy shared by every service.

Three families map onto gateway status codes: bad input (400), unknown
resource (404) and state conflict (409). Service code raises the concrete
class; the gateway turns it into the documented wire shape.
"""

from __future__ import annotations

from typing import Any


class OssError(Exception):
    """Base class; `code` is the stable machine-readable identifier."""

    http_status = 500

    def __init__(self, message: str = "", **details: Any):
        super().__init__(message or self.__class__.__name__)
        self.message = message or self.__class__.__name__
        self.details = details

    @property
    def code(self) -> str:
        return self.__class__.__name__

    def to_dict(self) -> dict:
        out = {"error": self.code, "message": self.message}
        if self.details:
            out["details"] = self.details
        return out


class BadRequest(OssError):
    http_status = 400


class NotFound(OssError):
    http_status = 404


class Conflict(OssError):
    http_status = 409


# -- persistence ------------------------------------------------------------

class RevisionConflict(Conflict):
    pass


class UnknownDocument(NotFound):
    pass


# -- core model / slice validation -------------------------------------------

class ValidationErrors(BadRequest):
    """Carries the complete list of violations, not just the first."""

    def __init__(self, violations: list[dict]):
        super().__init__("request validation failed", violations=violations)
        self.violations = violations

    @property
    def codes(self) -> set[str]:
        return {v["error"] for v in self.violations}


class UnknownTenant(BadRequest):
    pass


class UnknownSliceType(BadRequest):
    pass


class EmptyCoverage(BadRequest):
    pass


class UnknownArea(BadRequest):
    pass


class NegativeBudget(BadRequest):
    pass


class QuotaExceeded(Conflict):
    pass


class VlanPoolExhausted(Conflict):
    pass


class DuplicateTenantVlanRange(Conflict):
    pass


# -- nb-oss -------------------------------------------------------------------

class DuplicateEndpoint(Conflict):
    pass


class EmptyAreaSet(BadRequest):
    pass


class NoCoverage(Conflict):
    pass


class UnknownSboss(NotFound):
    pass


class UnknownSlice(NotFound):
    pass


class InvalidState(Conflict):
    pass


# -- sb-core ------------------------------------------------------------------

class LayerDisabled(Conflict):
    pass


class NoMatchingBlueprintType(BadRequest):
    pass


class BlueprintFailed(Conflict):
    pass


# -- nfvcl ---------------------------------------------------------------------

class UnknownBlueprintType(NotFound):
    pass


class BlueprintTypeNotExecutable(BadRequest):
    pass


class SchemaViolation(BadRequest):
    pass


class TopologyMissing(BadRequest):
    pass


class NoCoreArea(BadRequest):
    pass


class MultipleCoreAreas(BadRequest):
    pass


class DanglingVnfdRef(BadRequest):
    pass


class DanglingLinkRef(BadRequest):
    pass


class UnknownInstance(NotFound):
    pass


class UnknownAction(NotFound):
    pass


class InstanceNotReady(Conflict):
    pass


class BundleApplyFailed(Conflict):
    pass


class InvalidDelta(BadRequest):
    pass


class SlicesStillAttached(Conflict):
    pass


class UnknownOperation(NotFound):
    pass


class DuplicateName(Conflict):
    pass


class CidrOverlap(Conflict):
    pass


# -- metalcl --------------------------------------------------------------------

class UnknownMachine(NotFound):
    pass


class ProbeFailed(Conflict):
    pass


class UnknownImage(BadRequest):
    pass


class VlanExhausted(Conflict):
    pass


class NoFreeNicPort(Conflict):
    pass


class DisconnectedMembers(Conflict):
    pass


class MachineUnreachable(Conflict):
    pass


class StepFailed(Conflict):
    pass


class UnknownStack(NotFound):
    pass


class UnknownOverlay(NotFound):
    pass


# -- sim ---------------------------------------------------------------------------

class MalformedInventory(BadRequest):
    pass


class DanglingCable(BadRequest):
    pass


class UnknownNsd(NotFound):
    pass


class UnknownNs(NotFound):
    pass


class InvalidPackage(BadRequest):
    pass


class UnknownNetwork(NotFound):
    pass


class UnknownVimInstance(NotFound):
    pass


class UnknownVim(NotFound):
    pass


class SwitchUnreachable(Conflict):
    pass


# -- gateway / scenarios -------------------------------------------------------------

class ScenarioStepFailed(OssError):
    def __init__(self, index: int, detail: str):
        super().__init__(f"step {index} failed: {detail}", index=index, detail=detail)
        self.index = index
        self.detail = detail
