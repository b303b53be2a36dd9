"""Verification records and their canonical JSON serialization."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from . import __version__

PASS, FAIL, INFO = "pass", "fail", "info"
WITNESS_LIMIT = 600

# identity each check id family refers to
ANCHORS = {
    "verify.oae": "oriented associativity equations for the displacement vector",
    "verify.wdvv": "WDVV associativity equations for the prepotential",
    "verify.reduction": "gradient reduction maps WDVV solutions to oriented solutions",
    "control": "counterexample must be rejected with a witness",
    "tower.w": "w-tower recursion dw_k = c w_(k-1)",
    "tower.v": "v-tower recursion d2 v_k = c dv_(k-1)",
    "tower.degree": "degree growth bound of the towers",
    "spectral.vector": "vector spectral problem dpsi = lam c psi",
    "spectral.scalar": "scalar spectral problem chi_,ag = lam c chi_,nu",
    "spectral.covector": "adjoint covector problem dphi = lam c phi",
    "spectral.reduction": "gradient reduction of the vector spectral problem psi = eta grad chi",
    "symmetry.tau": "nonlocal symmetry psi(lam)",
    "symmetry.sigma": "nonlocal symmetry psi(lam) chi(-lam)",
    "symmetry.zeta": "nonlocal symmetry psi(lam) chi(-lam) + psi(-lam) chi(lam)",
    "symmetry.X": "coefficient symmetries X_(k,b) = columns of w_k",
    "symmetry.Y": "coefficient symmetries Y^b_(k,g) = sum (-1)^j v_j^b w_(k-j)",
    "symmetry.wdvv-chi": "prepotential symmetry chi(lam)",
    "symmetry.wdvv-chichi": "prepotential symmetry chi(lam) chi(-lam)",
    "symmetry.Xt": "prepotential coefficient symmetries v_k^b",
    "symmetry.Zt": "prepotential coefficient symmetries sum (-1)^j v_j^a v_(k-j)^b",
    "symmetry.sigma-rank": "linear independence of sigma coefficients (open question, reported only)",
    "flows.tau-tau": "commuting extended tau flows on K, psi and chi",
    "flows.sigma-pairs": "commuting tau/sigma and sigma/sigma flows on K",
    "flows.sigma-extended": "sigma flows on psi and chi (open question, reported only)",
    "flows.w-hierarchy": "commuting coefficient flows tau^b_k with w-extension",
    "flows.wdvv": "commuting extended prepotential flows",
    "darboux": "Darboux-type change of variables x~ = psi(lam) keeps c~ symmetric and associative",
    "darboux.instantiated": "Darboux map with lam replaced by a number (reported only)",
    "integral.first": "first-kind intermediate integral dG^b_g = K^b_,ar K^r_,g",
    "integral.second": "second-kind intermediate integral d2 G^b = K^nu_,ag K^b_,nu",
    "backlund.oae": "conditional Backlund transformation d2 H = K_,ar K^r_,g",
    "backlund.wdvv": "Backlund-type map from WDVV solutions to oriented solutions",
    "backlund.equivalence": "side condition fails exactly when the integrator reports non-closedness",
}


def anchor_for(check: str) -> str:
    """Check ids read ``family/bundle/qualifiers``; the family selects the anchor."""
    return ANCHORS[check.split("/", 1)[0]]


def _clip(text: str | None) -> str | None:
    if text is None or len(text) <= WITNESS_LIMIT:
        return text
    return text[:WITNESS_LIMIT] + f"... [{len(text) - WITNESS_LIMIT} more chars]"


@dataclass
class Record:
    check: str
    verdict: str
    detail: str
    witness: str | None = None
    timing: float | None = None

    def as_dict(self, timings: bool) -> dict:
        out = {
            "check": self.check,
            "anchor": anchor_for(self.check),
            "verdict": self.verdict,
            "detail": _clip(self.detail),
            "witness": _clip(self.witness),
        }
        if timings and self.timing is not None:
            out["seconds"] = round(self.timing, 3)
        return out


@dataclass
class Report:
    command: str
    seed: int
    options: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)  # bundle id -> sha256 of its text
    records: list = field(default_factory=list)
    timings: bool = False

    def add(self, record: Record) -> None:
        self.records.append(record)

    def extend(self, records) -> None:
        self.records.extend(records)

    @property
    def failed(self) -> list:
        return [r for r in self.records if r.verdict == FAIL]

    @property
    def status(self) -> str:
        return FAIL if self.failed else PASS

    @property
    def input_digest(self) -> str:
        h = hashlib.sha256()
        for key in sorted(self.inputs):
            h.update(f"{key}\0{self.inputs[key]}\n".encode())
        return h.hexdigest()

    def as_dict(self) -> dict:
        return {
            "tool": "oaesym",
            "version": __version__,
            "command": self.command,
            "seed": self.seed,
            "options": self.options,
            "inputs": self.inputs,
            "input_digest": self.input_digest,
            "status": self.status,
            "summary": {v: sum(1 for r in self.records if r.verdict == v) for v in (PASS, FAIL, INFO)},
            "records": [r.as_dict(self.timings) for r in sorted(self.records, key=lambda r: r.check)],
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=2, ensure_ascii=True) + "\n"
