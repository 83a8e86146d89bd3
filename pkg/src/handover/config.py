"""Pipeline configuration: every tunable in one serializable, fingerprintable
object. Reports embed the fingerprint so runs with different parameters are
never compared silently.
"""

from __future__ import annotations

import hashlib
import json
import os
from typing import Literal

from pydantic import BaseModel, Field

# Fields that never influence results and stay out of the fingerprint.
_FINGERPRINT_EXCLUDE = {"llm_api_key", "transcript_path"}


class GripperConfig(BaseModel):
    max_width: float = Field(default=0.08, gt=0)
    min_width: float = Field(default=0.0, ge=0)
    finger_depth: float = Field(default=0.04, gt=0)


class PipelineConfig(BaseModel):
    """All ledgered parameters of the handover pipeline."""

    reasoner: Literal["rule", "remote"] = "rule"
    backend: Literal["fixture", "external"] = "fixture"
    backend_root: str | None = None
    backend_command: str | None = None

    # part segmentation refinement
    containment_tol: float = Field(default=0.05, ge=0, le=1)
    overlap_thresh: float = Field(default=0.5, gt=0, le=1)
    eps_floor: float = Field(default=0.005, gt=0)
    eps_scale: float = Field(default=0.02, ge=0)
    min_pts: int = Field(default=10, ge=1)
    significance: float = Field(default=0.05, ge=0, le=1)
    crop_padding: int = Field(default=10, ge=0)

    # grasping
    gripper: GripperConfig = Field(default_factory=GripperConfig)
    grasp_count: int = Field(default=40, ge=1)
    fps_k: int = Field(default=5, ge=1)
    regen_rounds: int = Field(default=3, ge=1)
    include_geometry: bool = True
    include_human_part: bool = True
    random_tie: bool = False

    # evaluation
    det_iou_thresh: float = Field(default=0.5, gt=0, le=1)
    interference_margin: float = Field(default=0.01, ge=0)

    # handover pose
    handover_position: tuple[float, float, float] = (0.4, 0.0, 0.6)
    base_to_human: tuple[float, float, float] = (1.0, 0.0, 0.0)

    # reasoner client
    llm_endpoint: str | None = None
    llm_api_key: str | None = None
    llm_model: str | None = None
    llm_retries: int = Field(default=3, ge=0)
    llm_temperature: float = Field(default=0.0, ge=0)
    si_precision: int = Field(default=4, ge=1, le=12)
    transcript_path: str | None = None

    seed: int = 0

    def with_env_credentials(self) -> "PipelineConfig":
        """Fill endpoint settings from LLM_ENDPOINT / LLM_API_KEY / LLM_MODEL."""
        updates = {}
        if self.llm_endpoint is None and os.environ.get("LLM_ENDPOINT"):
            updates["llm_endpoint"] = os.environ["LLM_ENDPOINT"]
        if self.llm_api_key is None and os.environ.get("LLM_API_KEY"):
            updates["llm_api_key"] = os.environ["LLM_API_KEY"]
        if self.llm_model is None and os.environ.get("LLM_MODEL"):
            updates["llm_model"] = os.environ["LLM_MODEL"]
        return self.model_copy(update=updates) if updates else self

    def fingerprint(self) -> str:
        payload = self.model_dump(mode="json")
        for key in _FINGERPRINT_EXCLUDE:
            payload.pop(key, None)
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @staticmethod
    def from_file(path) -> "PipelineConfig":
        with open(path) as f:
            return PipelineConfig.model_validate(json.load(f))
