"""Point-cloud primitives: depth unprojection, geometric summaries, DBSCAN,
and 2D mask arithmetic.

All distances are meters. Depth images on disk are 16-bit single-channel PNG
in millimeters; masks are 8-bit single-channel PNG, nonzero = member. All
operations here are pure functions over immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from PIL import Image
from scipy.spatial import cKDTree

from .errors import DegenerateGeometryError, InputError

EIGENVALUE_TIE_RTOL = 1e-9


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole parameters. fx/fy/cx/cy in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise InputError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if not (0 <= self.cx < self.width) or not (0 <= self.cy < self.height):
            raise InputError(
                f"principal point ({self.cx}, {self.cy}) outside image {self.width}x{self.height}"
            )


@dataclass(frozen=True)
class Mask2D:
    """Binary pixel membership, shape (height, width)."""

    bitmap: np.ndarray

    def __post_init__(self):
        if self.bitmap.ndim != 2:
            raise InputError(f"mask bitmap must be 2D, got shape {self.bitmap.shape}")
        if self.bitmap.dtype != bool:
            object.__setattr__(self, "bitmap", self.bitmap.astype(bool))

    @property
    def height(self) -> int:
        return self.bitmap.shape[0]

    @property
    def width(self) -> int:
        return self.bitmap.shape[1]

    @property
    def count(self) -> int:
        return int(self.bitmap.sum())

    def intersection(self, other: "Mask2D") -> "Mask2D":
        _check_same_shape(self, other)
        return Mask2D(self.bitmap & other.bitmap)

    def union(self, other: "Mask2D") -> "Mask2D":
        _check_same_shape(self, other)
        return Mask2D(self.bitmap | other.bitmap)

    def difference(self, other: "Mask2D") -> "Mask2D":
        _check_same_shape(self, other)
        return Mask2D(self.bitmap & ~other.bitmap)

    @staticmethod
    def from_pixel_indices(indices: np.ndarray, width: int, height: int) -> "Mask2D":
        bitmap = np.zeros(height * width, dtype=bool)
        bitmap[np.asarray(indices, dtype=np.int64)] = True
        return Mask2D(bitmap.reshape(height, width))


@dataclass(frozen=True)
class PointCloud:
    """Nx3 points in meters, optionally tagged with their source pixels.

    pixel_indices are flat indices (v * width + u) into the source image and,
    when present, are unique; image_size is (width, height) of that image.
    """

    points: np.ndarray
    pixel_indices: np.ndarray | None = None
    image_size: tuple[int, int] | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        object.__setattr__(self, "points", pts)
        if not np.isfinite(pts).all():
            raise InputError("point cloud contains non-finite coordinates")
        if self.pixel_indices is not None:
            idx = np.asarray(self.pixel_indices, dtype=np.int64)
            object.__setattr__(self, "pixel_indices", idx)
            if idx.shape[0] != pts.shape[0]:
                raise InputError("pixel_indices length does not match point count")
            if len(np.unique(idx)) != len(idx):
                raise InputError("pixel_indices must be unique")
            if self.image_size is not None:
                w, h = self.image_size
                if len(idx) and (idx.min() < 0 or idx.max() >= w * h):
                    raise InputError("pixel_indices out of image bounds")

    def __len__(self) -> int:
        return self.points.shape[0]

    def subset(self, selector: np.ndarray) -> "PointCloud":
        """New cloud from a boolean or integer selector over this cloud's rows."""
        idx = self.pixel_indices[selector] if self.pixel_indices is not None else None
        return PointCloud(self.points[selector], idx, self.image_size)

    def mask(self) -> Mask2D:
        """Footprint of this cloud in its source image."""
        if self.pixel_indices is None or self.image_size is None:
            raise InputError("cloud has no source-pixel information")
        w, h = self.image_size
        return Mask2D.from_pixel_indices(self.pixel_indices, w, h)


@dataclass(frozen=True)
class GeomSummary:
    """Derived descriptors of a cloud: centroid, bounds, dominant axis."""

    centroid: np.ndarray
    aabb_min: np.ndarray
    aabb_max: np.ndarray
    dominant_axis: np.ndarray
    dominant_length: float
    point_count: int

    def to_dict(self) -> dict:
        return {
            "centroid": self.centroid.tolist(),
            "aabb_min": self.aabb_min.tolist(),
            "aabb_max": self.aabb_max.tolist(),
            "dominant_axis": self.dominant_axis.tolist(),
            "dominant_length": float(self.dominant_length),
            "point_count": int(self.point_count),
        }


@dataclass(frozen=True)
class Cluster:
    """DBSCAN output: indices into the clustered cloud."""

    member_indices: np.ndarray
    is_noise: bool = False

    def __len__(self) -> int:
        return len(self.member_indices)


def _check_same_shape(a: Mask2D, b: Mask2D) -> None:
    if a.bitmap.shape != b.bitmap.shape:
        raise InputError(f"mask dimensions differ: {a.bitmap.shape} vs {b.bitmap.shape}")


def unproject(depth: np.ndarray, intrinsics: CameraIntrinsics, mask: Mask2D | None = None) -> PointCloud:
    """Back-project a depth image (meters) to a camera-frame point cloud.

    One point per selected pixel with depth > 0, at
    ((u-cx)*d/fx, (v-cy)*d/fy, d). Zero/invalid-depth pixels are skipped and
    every point keeps its flat source-pixel index.
    """
    depth = np.asarray(depth, dtype=np.float64)
    if depth.shape != (intrinsics.height, intrinsics.width):
        raise InputError(
            f"depth shape {depth.shape} does not match intrinsics "
            f"{intrinsics.height}x{intrinsics.width}"
        )
    valid = np.isfinite(depth) & (depth > 0)
    if mask is not None:
        if mask.bitmap.shape != depth.shape:
            raise InputError(f"mask shape {mask.bitmap.shape} does not match depth {depth.shape}")
        valid &= mask.bitmap
    v, u = np.nonzero(valid)
    d = depth[v, u]
    x = (u - intrinsics.cx) * d / intrinsics.fx
    y = (v - intrinsics.cy) * d / intrinsics.fy
    points = np.column_stack([x, y, d])
    flat = v.astype(np.int64) * intrinsics.width + u.astype(np.int64)
    return PointCloud(points, flat, (intrinsics.width, intrinsics.height))


def reproject(cloud: PointCloud, intrinsics: CameraIntrinsics) -> np.ndarray:
    """Project points back to flat pixel indices (nearest pixel)."""
    pts = cloud.points
    if len(pts) == 0:
        return np.zeros(0, dtype=np.int64)
    z = pts[:, 2]
    if np.any(z <= 0):
        raise InputError("cannot reproject points with non-positive depth")
    u = np.rint(pts[:, 0] * intrinsics.fx / z + intrinsics.cx).astype(np.int64)
    v = np.rint(pts[:, 1] * intrinsics.fy / z + intrinsics.cy).astype(np.int64)
    if np.any((u < 0) | (u >= intrinsics.width) | (v < 0) | (v >= intrinsics.height)):
        raise InputError("reprojected point falls outside the image")
    return v * intrinsics.width + u


def summarize(cloud: PointCloud) -> GeomSummary:
    """Centroid, exact AABB, and dominant axis of a cloud.

    The dominant axis is the unit eigenvector of the point covariance with the
    largest eigenvalue; its sign is fixed so the largest-magnitude component is
    positive (earliest coordinate wins ties). dominant_length is the spread of
    point projections along that axis.

    Raises DegenerateGeometryError for < 3 points or when the top two
    eigenvalues coincide within 1e-9 relative (no unique axis).
    """
    pts = cloud.points
    if len(pts) < 3:
        raise DegenerateGeometryError(f"need at least 3 points, got {len(pts)}")
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    cov = centered.T @ centered / len(pts)
    eigvals, eigvecs = np.linalg.eigh(cov)  # ascending
    top, second = eigvals[2], eigvals[1]
    if top <= 0:
        raise DegenerateGeometryError("all points coincident")
    if (top - second) <= EIGENVALUE_TIE_RTOL * top:
        raise DegenerateGeometryError(
            f"no unique dominant axis: top eigenvalues {top:.3e} and {second:.3e}"
        )
    axis = eigvecs[:, 2]
    axis = _canonical_sign(axis)
    proj = centered @ axis
    return GeomSummary(
        centroid=centroid,
        aabb_min=pts.min(axis=0),
        aabb_max=pts.max(axis=0),
        dominant_axis=axis,
        dominant_length=float(proj.max() - proj.min()),
        point_count=len(pts),
    )


def _canonical_sign(axis: np.ndarray) -> np.ndarray:
    mags = np.abs(axis)
    lead = int(np.argmax(mags))  # argmax returns the earliest index on ties
    return axis if axis[lead] > 0 else -axis


def dbscan(cloud: PointCloud, eps: float, min_pts: int) -> list[Cluster]:
    """Density clustering over 3D points.

    Neighborhoods use Euclidean distance <= eps and include the point itself;
    a point is core iff its neighborhood has >= min_pts members. Clusters are
    connected components of core points; a border point joins the cluster of
    its lowest-indexed core neighbor, which makes the partition deterministic.
    Returned clusters are ordered by their smallest member index, followed by
    one noise cluster if any points are noise.
    """
    if eps <= 0:
        raise InputError(f"eps must be positive, got {eps}")
    if min_pts < 1:
        raise InputError(f"min_pts must be >= 1, got {min_pts}")
    n = len(cloud)
    if n == 0:
        return []
    pts = cloud.points
    tree = cKDTree(pts)
    neighbors = tree.query_ball_point(pts, eps)  # includes self
    counts = np.fromiter((len(nb) for nb in neighbors), dtype=np.int64, count=n)
    core = counts >= min_pts

    labels = np.full(n, -1, dtype=np.int64)
    cluster_id = 0
    for start in range(n):
        if not core[start] or labels[start] != -1:
            continue
        # BFS over the core graph
        labels[start] = cluster_id
        frontier = [start]
        while frontier:
            p = frontier.pop()
            for q in neighbors[p]:
                if core[q] and labels[q] == -1:
                    labels[q] = cluster_id
                    frontier.append(q)
        cluster_id += 1

    # Border points: lowest-indexed core neighbor decides membership.
    for p in range(n):
        if core[p] or labels[p] != -1:
            continue
        core_nb = [q for q in neighbors[p] if core[q]]
        if core_nb:
            labels[p] = labels[min(core_nb)]

    clusters = []
    for cid in range(cluster_id):
        members = np.nonzero(labels == cid)[0]
        clusters.append(Cluster(member_indices=members, is_noise=False))
    clusters.sort(key=lambda c: int(c.member_indices.min()))
    noise = np.nonzero(labels == -1)[0]
    if len(noise):
        clusters.append(Cluster(member_indices=noise, is_noise=True))
    return clusters


def containment_ratio(part: Mask2D, obj: Mask2D) -> float:
    """Fraction of part pixels that lie inside the object mask."""
    _check_same_shape(part, obj)
    denom = part.count
    if denom == 0:
        raise InputError("part mask is empty")
    return float((part.bitmap & obj.bitmap).sum() / denom)


def mask_overlap(a: Mask2D, b: Mask2D) -> float:
    """|a intersect b| / min(|a|, |b|). Symmetric."""
    _check_same_shape(a, b)
    ca, cb = a.count, b.count
    if ca == 0 or cb == 0:
        raise InputError("mask_overlap requires two non-empty masks")
    inter = int((a.bitmap & b.bitmap).sum())
    return float(inter / min(ca, cb))


def crop_to_mask(width: int, height: int, obj: Mask2D, padding: int = 0) -> tuple[int, int, int, int]:
    """Bounding box (u0, v0, u1, v1), inclusive, of the mask dilated by
    padding pixels and clipped to the image."""
    if obj.count == 0:
        raise InputError("cannot crop around an empty mask")
    if obj.bitmap.shape != (height, width):
        raise InputError(f"mask shape {obj.bitmap.shape} does not match image {height}x{width}")
    v, u = np.nonzero(obj.bitmap)
    u0 = max(0, int(u.min()) - padding)
    v0 = max(0, int(v.min()) - padding)
    u1 = min(width - 1, int(u.max()) + padding)
    v1 = min(height - 1, int(v.max()) + padding)
    return (u0, v0, u1, v1)


# --- image IO (external interface: 16-bit mm depth PNG, 8-bit mask PNG) ---


def load_depth(path) -> np.ndarray:
    """Read a 16-bit millimeter depth PNG as a float64 meter image."""
    with Image.open(path) as img:
        arr = np.array(img)
    if arr.ndim != 2:
        raise InputError(f"depth image {path} is not single-channel")
    return arr.astype(np.float64) / 1000.0


def save_depth(path, depth_m: np.ndarray) -> None:
    mm = np.clip(np.rint(np.asarray(depth_m) * 1000.0), 0, 65535).astype(np.uint16)
    Image.fromarray(mm).save(path, format="PNG")


def load_mask(path) -> Mask2D:
    """Read an 8-bit PNG; nonzero pixels are members."""
    with Image.open(path) as img:
        arr = np.array(img)
    if arr.ndim != 2:
        raise InputError(f"mask image {path} is not single-channel")
    return Mask2D(arr != 0)


def save_mask(path, mask: Mask2D) -> None:
    Image.fromarray(mask.bitmap.astype(np.uint8) * 255).save(path, format="PNG")
