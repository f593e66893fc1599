"""End-to-end: the splat trainer driving the mock bridge over HTTP.

Zero residuals from the bridge must make training a no-op, proving the
full remote round trip (encode, serve, decode) behaves like the in-process
zero guidance.
"""

import numpy as np
import pytest

splatgen = pytest.importorskip("splatgen")

from splatgen.core import init_cloud
from splatgen.guidance import RemoteGuidance
from splatgen.trainer import TrainConfig, train_stage1

from gsbridge import BridgeConfig, BridgeServer


def test_trainer_noop_through_mock_bridge():
    config = TrainConfig(steps=4, mode="text", seed=3, init_count=40,
                         resolution_start=48, resolution_end=48,
                         densify_interval=100)
    start = init_cloud(config.init_count, config.init_radius, seed=config.seed)
    with BridgeServer(BridgeConfig(model="mock", port=0)) as server:
        result = train_stage1(
            config, RemoteGuidance(server.endpoint, timeout=30.0), prompt="x"
        )
    np.testing.assert_array_equal(result.cloud.centers, start.centers)
    np.testing.assert_allclose(result.cloud.opacities, start.opacities, rtol=1e-14)
    assert np.all(result.trace["sds_norm"] == 0.0)
