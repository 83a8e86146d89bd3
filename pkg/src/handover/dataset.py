"""RGB-D part-segmentation dataset: manifest loader and part taxonomy.

A dataset root holds ``dataset.json`` plus the image files it references
(relative paths). Depth is 16-bit millimeter PNG, masks are 8-bit PNG.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError
from .geometry import CameraIntrinsics, Mask2D, load_depth, load_mask

MANIFEST_NAME = "dataset.json"

# Object classes and their functional parts, in along-axis order starting at
# the grip end. Order matters: it drives label priority and cluster naming.
_TAXONOMY: dict[str, tuple[str, ...]] = {
    "bottle": ("cap", "neck", "body"),
    "hammer": ("handle", "head"),
    "knife": ("handle", "blade"),
    "mug": ("body", "handle", "rim"),
    "pan": ("handle", "body"),
    "plier": ("handles", "pivot", "jaws"),
    "scissor": ("handles", "pivot", "blades"),
    "screwdriver": ("handle", "shaft", "tip"),
    "spoon": ("handle", "bowl"),
    "spraying bottle": ("nozzle", "trigger", "body"),
    "stapler": ("base", "upper arm"),
    "toothbrush": ("handle", "brush head"),
}

CONVENTIONAL_EASY = "conventional-easy"
CONVENTIONAL_COMPLEX = "conventional-complex"
UNCONVENTIONAL = "unconventional"

# (object class, task text, conventionality)
_TASK_PAIRS: tuple[tuple[str, str, str], ...] = (
    ("hammer", "hammer", CONVENTIONAL_EASY),
    ("knife", "cut", CONVENTIONAL_EASY),
    ("mug", "drink", CONVENTIONAL_EASY),
    ("screwdriver", "screw", CONVENTIONAL_EASY),
    ("pan", "cook", CONVENTIONAL_EASY),
    ("spoon", "stir", CONVENTIONAL_EASY),
    ("scissor", "cut", CONVENTIONAL_COMPLEX),
    ("plier", "pinch", CONVENTIONAL_COMPLEX),
    ("stapler", "staple", CONVENTIONAL_COMPLEX),
    ("bottle", "pour", CONVENTIONAL_COMPLEX),
    ("spraying bottle", "spray", CONVENTIONAL_COMPLEX),
    ("toothbrush", "brush teeth", CONVENTIONAL_COMPLEX),
    ("screwdriver", "hammer", UNCONVENTIONAL),
    ("screwdriver", "play xylophone", UNCONVENTIONAL),
    ("spoon", "open lid of jar", UNCONVENTIONAL),
    ("toothbrush", "push pin into a hole", UNCONVENTIONAL),
)


@dataclass(frozen=True)
class PartTaxonomy:
    """Object class -> ordered part names (12 household classes)."""

    entries: dict[str, tuple[str, ...]]

    def classes(self) -> list[str]:
        return list(self.entries.keys())

    def parts(self, object_class: str) -> tuple[str, ...] | None:
        return self.entries.get(object_class)

    def __contains__(self, object_class: str) -> bool:
        return object_class in self.entries

    def part_priority(self, object_class: str | None, labels: list[str]) -> list[str]:
        """Sort labels by taxonomy order for the class; unknown labels keep
        their relative order after the known ones."""
        known = list(self.entries.get(object_class or "", ()))

        def key(label: str):
            return (known.index(label), "") if label in known else (len(known), label)

        return sorted(labels, key=lambda lb: (key(lb), labels.index(lb)))


def taxonomy() -> PartTaxonomy:
    """The fixed 12-class part table."""
    return PartTaxonomy(dict(_TAXONOMY))


@dataclass(frozen=True)
class TaskSpec:
    """A post-handover command: which object, what the human will do with it."""

    object_class: str
    task_text: str
    conventionality: str = CONVENTIONAL_EASY


def task_pairs() -> list[TaskSpec]:
    """The 16 benchmark object-task pairs (12 conventional, 4 unconventional)."""
    return [TaskSpec(c, t, g) for c, t, g in _TASK_PAIRS]


@dataclass
class DatasetEntry:
    """One RGB-D observation with ground-truth part masks."""

    object_class: str
    instance_id: str
    pose_id: str
    rgb_path: Path
    depth_path: Path
    intrinsics: CameraIntrinsics
    object_mask: Mask2D
    gt_part_masks: dict[str, Mask2D]
    overlap_pixels: dict[tuple[str, str], int] = field(default_factory=dict)

    @property
    def key(self) -> str:
        return f"{self.object_class}__{self.instance_id}__{self.pose_id}"

    @property
    def entry_id(self) -> str:
        return f"{self.object_class}/{self.instance_id}/{self.pose_id}"

    def load_depth(self) -> np.ndarray:
        return load_depth(self.depth_path)

    def hard_label_masks(self) -> dict[str, Mask2D]:
        """Disjoint view of the ground truth: overlap pixels go to the part
        that comes first in taxonomy order."""
        order = taxonomy().part_priority(self.object_class, list(self.gt_part_masks))
        taken = np.zeros_like(self.object_mask.bitmap)
        out = {}
        for name in order:
            bm = self.gt_part_masks[name].bitmap & ~taken
            out[name] = Mask2D(bm)
            taken |= bm
        return {name: out[name] for name in self.gt_part_masks}


def _entry_id_of(row: dict) -> str:
    return "/".join(str(row.get(k, "?")) for k in ("object_class", "instance_id", "pose_id"))


def load_dataset(root) -> list[DatasetEntry]:
    """Load every entry listed in ``<root>/dataset.json``, in manifest order.

    Masks are validated against the entry intrinsics and the taxonomy; ground
    truth part masks are clipped to the object mask, and pixels annotated under
    more than one part are recorded in ``overlap_pixels``.
    """
    root = Path(root)
    manifest_path = root / MANIFEST_NAME
    if not manifest_path.is_file():
        raise InputError(f"no {MANIFEST_NAME} under {root}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as e:
        raise InputError(f"unparseable manifest {manifest_path}: {e}") from e

    tax = taxonomy()
    entries = []
    for row in manifest.get("entries", []):
        eid = _entry_id_of(row)
        try:
            entries.append(_load_entry(root, row, tax))
        except InputError as e:
            raise InputError(f"entry {eid}: {e}") from e
        except FileNotFoundError as e:
            raise InputError(f"entry {eid}: missing file {e.filename}") from e
    return entries


def _load_entry(root: Path, row: dict, tax: PartTaxonomy) -> DatasetEntry:
    for key in ("object_class", "instance_id", "pose_id", "rgb", "depth", "object_mask", "intrinsics", "parts"):
        if key not in row:
            raise InputError(f"manifest row missing field '{key}'")
    cls = row["object_class"]
    allowed = tax.parts(cls)
    if allowed is None:
        raise InputError(f"unknown object class '{cls}'")

    intr = CameraIntrinsics(**row["intrinsics"])
    shape = (intr.height, intr.width)

    rgb_path = root / row["rgb"]
    if not rgb_path.is_file():
        raise InputError(f"missing rgb file {rgb_path}")
    depth_path = root / row["depth"]
    depth = load_depth(depth_path)
    if depth.shape != shape:
        raise InputError(f"depth {depth.shape} does not match intrinsics {shape}")

    obj_mask = load_mask(root / row["object_mask"])
    if obj_mask.bitmap.shape != shape:
        raise InputError(f"object mask {obj_mask.bitmap.shape} does not match intrinsics {shape}")

    gt = {}
    for part, rel in row["parts"].items():
        if part not in allowed:
            raise InputError(f"part '{part}' is not a {cls} part (expected one of {list(allowed)})")
        m = load_mask(root / rel)
        if m.bitmap.shape != shape:
            raise InputError(f"part '{part}' mask {m.bitmap.shape} does not match intrinsics {shape}")
        gt[part] = Mask2D(m.bitmap & obj_mask.bitmap)  # clip to object

    overlaps = {}
    names = list(gt)
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            shared = int((gt[names[i]].bitmap & gt[names[j]].bitmap).sum())
            if shared:
                overlaps[(names[i], names[j])] = shared

    return DatasetEntry(
        object_class=cls,
        instance_id=str(row["instance_id"]),
        pose_id=str(row["pose_id"]),
        rgb_path=rgb_path,
        depth_path=depth_path,
        intrinsics=intr,
        object_mask=obj_mask,
        gt_part_masks=gt,
        overlap_pixels=overlaps,
    )


def find_entry(entries: list[DatasetEntry], entry_id: str) -> DatasetEntry:
    """Look up an entry by 'class/instance/pose' id."""
    for e in entries:
        if e.entry_id == entry_id:
            return e
    raise InputError(f"no entry '{entry_id}' in dataset ({len(entries)} entries)")
