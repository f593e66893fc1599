"""PLY round-trip and error-path tests."""

import io

import numpy as np
import pytest

from splatgen.core import GaussianCloud, init_cloud
from splatgen.core.ply import PLY_PROPERTIES, ply_dumps, ply_loads, ply_read
from splatgen.errors import PlyHeaderError, PlyPropertyError, PlyTruncatedError


def random_cloud(n, seed):
    """Random cloud whose values are exactly float32-representable, since the
    PLY layout stores 32-bit floats."""
    rng = np.random.default_rng(seed)
    f32 = lambda a: a.astype(np.float32).astype(np.float64)
    rot = rng.normal(size=(n, 4))
    rot /= np.linalg.norm(rot, axis=1, keepdims=True)
    return GaussianCloud(
        centers=f32(rng.uniform(-1, 1, (n, 3))),
        scales=f32(rng.uniform(0.01, 0.2, (n, 3))),
        rotations=f32(rot),
        opacities=f32(rng.uniform(0.0, 1.0, n)),
        colors=f32(rng.uniform(0.0, 1.0, (n, 3))),
    )


def test_roundtrip_bit_identical():
    for seed in range(5):
        cloud = random_cloud(50, seed)
        back = ply_loads(ply_dumps(cloud))
        assert np.array_equal(back.centers, cloud.centers)
        assert np.array_equal(back.scales, cloud.scales)
        assert np.array_equal(back.rotations, cloud.rotations)
        assert np.array_equal(back.opacities, cloud.opacities)
        assert np.array_equal(back.colors, cloud.colors)


def test_roundtrip_quantizes_to_float32():
    cloud = init_cloud(64, 0.5, seed=2)
    back = ply_loads(ply_dumps(cloud))
    assert np.array_equal(back.centers, cloud.centers.astype(np.float32).astype(np.float64))


def test_file_size_matches_layout():
    # 14 float32 properties per vertex, per the declared layout.
    cloud = random_cloud(5000, 0)
    blob = ply_dumps(cloud)
    header_len = blob.index(b"end_header\n") + len(b"end_header\n")
    assert len(blob) == header_len + 5000 * 14 * 4
    assert len(PLY_PROPERTIES) == 14


def test_missing_opacity_property_named():
    cloud = random_cloud(3, 1)
    blob = ply_dumps(cloud)
    text = blob.replace(b"property float opacity\n", b"")
    with pytest.raises(PlyPropertyError, match="opacity"):
        ply_loads(text)


def test_property_order_mismatch_named():
    cloud = random_cloud(3, 1)
    blob = ply_dumps(cloud)
    swapped = blob.replace(
        b"property float x\nproperty float y\n",
        b"property float y\nproperty float x\n",
    )
    with pytest.raises(PlyPropertyError):
        ply_loads(swapped)


def test_truncated_payload():
    cloud = random_cloud(10, 1)
    blob = ply_dumps(cloud)
    with pytest.raises(PlyTruncatedError):
        ply_loads(blob[:-8])


def test_malformed_header():
    with pytest.raises(PlyHeaderError):
        ply_loads(b"not a ply\n")
    with pytest.raises(PlyHeaderError):
        ply_loads(b"ply\nformat ascii 1.0\nend_header\n")


def test_header_is_ascii_and_little_endian_declared():
    blob = ply_dumps(random_cloud(1, 0))
    header = blob[: blob.index(b"end_header")]
    header.decode("ascii")
    assert b"binary_little_endian" in header


def test_read_from_stream():
    cloud = random_cloud(7, 5)
    back = ply_read(io.BytesIO(ply_dumps(cloud)))
    assert len(back) == 7
    assert np.all(back.grad_accum == 0.0)
