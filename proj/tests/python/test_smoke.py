# Copyright 2026 The fvrnet Authors
# SPDX-License-Identifier: Apache-2.0

import math

import numpy as np
import pytest

import fvrnet


def test_params_matrix_round_trip():
    p = fvrnet.RigidParams(1.5, -2.0, 0.25, 10.0, -20.0, 30.0)
    m = fvrnet.params_to_matrix(p)
    assert m.shape == (4, 4)
    np.testing.assert_allclose(m[:3, :3] @ m[:3, :3].T, np.eye(3), atol=1e-12)
    np.testing.assert_allclose(m[3], [0, 0, 0, 1])
    back = fvrnet.matrix_to_params(m)
    np.testing.assert_allclose(back.to_list(), p.to_list(), atol=1e-9)


def test_non_rigid_matrix_rejected():
    m = np.eye(4)
    m[0, 0] = 2.0
    with pytest.raises(fvrnet.FvrError):
        fvrnet.matrix_to_params(m)


def test_corner_distance_of_pure_translation():
    a = fvrnet.RigidParams()
    b = fvrnet.RigidParams(tz=3.0)
    assert fvrnet.corner_distance_error(a, b, 32, 32, 2.0) == pytest.approx(3.0)


def test_volume_arrays_round_trip():
    data = np.arange(2 * 3 * 4, dtype=np.float32).reshape(2, 3, 4)
    v = fvrnet.Volume(data, (1.0, 0.5, 0.5))
    assert v.shape == (2, 3, 4)
    assert v.spacing == (1.0, 0.5, 0.5)
    np.testing.assert_array_equal(v.array(), data)


def test_sweep_and_registration(tmp_path):
    vol = fvrnet.phantom(7)
    sweep = fvrnet.simulate_sweep(vol, 7, n_frames=21, frame_size=36)
    assert len(sweep) == 21
    assert sweep.frames[0].shape == (36, 36)
    fvrnet.save_sweep(sweep, tmp_path / "sweep")
    again = fvrnet.load_sweep(tmp_path / "sweep")
    np.testing.assert_array_equal(again.frames[5].array(), sweep.frames[5].array())

    pair = fvrnet.make_pair(sweep, 10, 7)
    assert pair.subvolume.shape == (8, 32, 32)
    start = fvrnet.corner_distance_error(fvrnet.RigidParams(), pair.label, 32, 32, 2.0)
    result = fvrnet.register(pair.frame, pair.subvolume)
    end = fvrnet.corner_distance_error(result.theta, pair.label, 32, 32, 2.0)
    assert result.objective_trace[-1] <= result.objective_trace[0]
    assert end < start


def test_similarity_measures():
    vol = fvrnet.phantom(3)
    a = fvrnet.sample_slice(vol, fvrnet.RigidParams(), 24, 24, 2.0)
    assert fvrnet.mse(a, a) == 0.0
    assert fvrnet.ncc(a, a) == pytest.approx(1.0)
    assert math.isfinite(fvrnet.ncc(a, fvrnet.sample_slice(vol, fvrnet.RigidParams(tz=4), 24, 24, 2.0)))
