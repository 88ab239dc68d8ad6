import numpy as np
import pytest

from exclusive_qec.code_model import (
    NoiseParams,
    PauliError,
    SpacetimeError,
    build_code,
    build_spacetime,
    ft_sector,
    logical_sector,
    sample_errors,
    sample_spacetime_errors,
    sector_bits,
    shot_block_rng,
    syndrome,
)
from exclusive_qec.errors import InvalidParameter, PreconditionViolation


@pytest.mark.parametrize("d", [2, 3, 4, 5, 7])
def test_rotated_code_counts(d):
    code = build_code(d)
    assert code.n == d * d
    assert code.hx.shape[0] + code.hz.shape[0] == d * d - 1
    assert not ((code.hx.astype(int) @ code.hz.T.astype(int)) % 2).any()


@pytest.mark.parametrize("d", [3, 5])
def test_logicals(d):
    code = build_code(d)
    lx, lz = code.logical_x.astype(int), code.logical_z.astype(int)
    assert not (code.hz.astype(int) @ lx % 2).any()
    assert not (code.hx.astype(int) @ lz % 2).any()
    assert lx @ lz % 2 == 1
    assert lx.sum() == d and lz.sum() == d
    assert logical_sector(code, PauliError(code.logical_x, np.zeros(code.n, np.uint8))) == "X"
    assert logical_sector(code, PauliError(code.logical_x, code.logical_z)) == "Y"


def test_stabilizers_are_trivial_class():
    code = build_code(5)
    for g in code.stabilizer_generators():
        assert syndrome(code, g).trivial
        assert logical_sector(code, g) == "I"


def test_pauli_algebra():
    e = PauliError.from_string("XYZI")
    assert str(e) == "XYZI"
    assert e.weight == 3
    assert (e * e).weight == 0
    assert str(PauliError.from_string("XII") * PauliError.from_string("ZII")) == "YII"
    assert str(PauliError.on(3, [1], "Y")) == "IYI"


def test_syndrome_of_single_errors():
    code = build_code(3)
    s = syndrome(code, PauliError.on(9, [4], "X"))
    assert list(s.z) == [0, 1, 1, 0]
    assert not s.x.any()
    s = syndrome(code, PauliError.on(9, [4], "Z"))
    assert list(s.x) == [0, 1, 1, 0]
    assert not s.trivial


def test_logical_sector_needs_trivial_syndrome():
    code = build_code(3)
    with pytest.raises(PreconditionViolation):
        logical_sector(code, PauliError.on(9, [0], "X"))


def test_sector_bits_batch():
    code = build_code(3)
    x = np.stack([code.logical_x, np.zeros(9, np.uint8)])
    z = np.stack([code.logical_z, code.logical_z])
    assert list(sector_bits(code, x, z)) == [3, 2]


def test_bad_distance():
    with pytest.raises(InvalidParameter):
        build_code(1)
    with pytest.raises(InvalidParameter):
        build_spacetime(3)


def test_noise_params():
    assert NoiseParams.fault_tolerant(0.03).p_m == pytest.approx(0.02)
    with pytest.raises(InvalidParameter):
        NoiseParams(1.5)


def test_sampling_rates():
    x, z = sample_errors(50, 0.3, 20000, shot_block_rng(1, 0))
    hit = (x | z).mean()
    assert abs(hit - 0.3) < 0.005
    y = (x & z).sum() / (x | z).sum()
    assert abs(y - 1 / 3) < 0.01


def test_block_streams_are_deterministic():
    a = shot_block_rng(5, 3).random(4)
    b = shot_block_rng(5, 3).random(4)
    c = shot_block_rng(5, 4).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_spacetime_measurement_string_wraps():
    st = build_spacetime(4)
    t, m = st.t, st.hz.shape[0]
    zero_d = np.zeros((t, st.n), np.uint8)
    mx = np.zeros((t, st.hx.shape[0]), np.uint8)
    mz = np.zeros((t, m), np.uint8)
    mz[:, 2] = 1
    ex, ez = st.detection_events(zero_d, zero_d, mx, mz)
    assert not ex.any() and not ez.any()
    assert ft_sector(st, SpacetimeError(zero_d, zero_d, mx, mz)) == "II10"
    mz[1, 2] = 0
    ex, ez = st.detection_events(zero_d, zero_d, mx, mz)
    assert ez.sum() == 2


def test_spacetime_data_logical():
    st = build_spacetime(4)
    x = np.zeros((st.t, st.n), np.uint8)
    z = np.zeros_like(x)
    x[2, :4] = 1  # X on row 0 in one round
    mx = np.zeros((st.t, st.hx.shape[0]), np.uint8)
    mz = np.zeros((st.t, st.hz.shape[0]), np.uint8)
    assert ft_sector(st, SpacetimeError(x, z, mx, mz)) == "XI00"


def test_spacetime_sampling_shapes():
    st = build_spacetime(2)
    x, z, mx, mz = sample_spacetime_errors(st, NoiseParams.fault_tolerant(0.1), 7, shot_block_rng(0, 0))
    assert x.shape == (7, 2, 4) and mx.shape == (7, 2, 2)
