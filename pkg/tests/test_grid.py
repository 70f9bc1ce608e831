import numpy as np
import pytest

from hpde.grid import (ALL_DIRICHLET, ALL_NEUMANN, FACES, BCSet, FaceBC, FieldBC, GridSpec,
                       HVectorField, ScalarField, read_checkpoint, read_vector_checkpoint,
                       temperature_bc, velocity_bc, write_checkpoint, write_vector_checkpoint)


def test_spacings_and_centres():
    g = GridSpec(2.0, 1.0, 0.5, 8, 4, 5)
    assert (g.dx, g.dy, g.dz) == (0.25, 0.25, 0.1)
    assert g.shape == (8, 4, 5) and g.shape2d == (8, 4)
    assert g.volume == pytest.approx(1.0)
    np.testing.assert_allclose(g.x, 0.125 + 0.25 * np.arange(8))
    np.testing.assert_allclose(g.z, -0.5 + 0.05 + 0.1 * np.arange(5))
    assert g.refined().shape == (16, 8, 10)


@pytest.mark.parametrize("args", [(0.0, 1.0, 1.0, 8, 8, 8), (1.0, -1.0, 1.0, 8, 8, 8),
                                  (1.0, 1.0, 1.0, 3, 8, 8), (1.0, 1.0, float("nan"), 8, 8, 8)])
def test_invalid_grid_rejected(args):
    with pytest.raises(ValueError):
        GridSpec(*args)


def test_ghost_factors():
    assert FaceBC("dirichlet0").ghost_factor(0.1) == -1.0
    assert FaceBC("neumann0").ghost_factor(0.1) == 1.0
    assert FaceBC("robin", 0.0).ghost_factor(0.1) == 1.0
    s = FaceBC("robin", 2.0).ghost_factor(0.1)
    # the ghost satisfies the face-midpoint Robin rule for any interior value
    inside = 3.7
    ghost = s * inside
    assert (ghost - inside) / 0.1 + 2.0 * (ghost + inside) / 2 == pytest.approx(0.0, abs=1e-13)


def test_face_validation():
    with pytest.raises(ValueError):
        FaceBC("periodic")
    with pytest.raises(ValueError):
        FaceBC("robin", -0.5)


def test_model_boundary_sets():
    vb = velocity_bc(0.3)
    assert [f.kind for f in vb.faces()] == ["dirichlet0"] * 5 + ["robin"]
    assert vb.z_hi.alpha == 0.3
    tb = temperature_bc(0.0)
    assert tb.conserves_mean
    assert not temperature_bc(0.2).conserves_mean
    assert ALL_NEUMANN.conserves_mean and not ALL_DIRICHLET.conserves_mean
    bcs = BCSet(0.1, 0.2)
    assert bcs.velocity == velocity_bc(0.1) and bcs.temperature == temperature_bc(0.2)
    assert len(FieldBC().ghost_factors(GridSpec())) == len(FACES)


def test_field_containers_check_shape():
    g = GridSpec(1.0, 1.0, 1.0, 4, 5, 6)
    ScalarField(g, np.zeros(g.shape))
    with pytest.raises(ValueError):
        ScalarField(g, np.zeros((4, 5, 7)))
    u = HVectorField(g, np.stack([np.ones(g.shape), 2 * np.ones(g.shape)]))
    p = u.perp()
    assert u.component(1).name == "v2"
    np.testing.assert_array_equal(p.data[0], -2.0)
    np.testing.assert_array_equal(p.data[1], 1.0)


def test_checkpoint_layout(tmp_path):
    g = GridSpec(1.0, 2.0, 0.5, 4, 5, 6)
    i, j, k = np.meshgrid(np.arange(4), np.arange(5), np.arange(6), indexing="ij")
    data = (i + 10 * j + 100 * k).astype(float)
    path = write_checkpoint(tmp_path / "f.hpde", data, g, "theta")
    raw = path.read_bytes()
    header, body = raw.split(b"\n", 1)
    assert header.split()[:4] == [b"HPDE1", b"4", b"5", b"6"]
    assert header.split()[-1] == b"theta"
    vals = np.frombuffer(body, dtype="<f8")
    np.testing.assert_array_equal(vals[:6], [0, 1, 2, 3, 10, 11])  # x fastest
    hdr, back = read_checkpoint(path)
    np.testing.assert_array_equal(back, data)
    assert (hdr.Lx, hdr.Ly, hdr.h) == (1.0, 2.0, 0.5)


def test_checkpoint_2d_and_vector(tmp_path, rng):
    g = GridSpec(1.0, 1.0, 0.5, 4, 4, 4)
    q = rng.standard_normal(g.shape2d)
    hdr, back = read_checkpoint(write_checkpoint(tmp_path / "q.hpde", q, g, "q"))
    assert hdr.nz == 1
    np.testing.assert_array_equal(back[:, :, 0], q)
    v = rng.standard_normal((2, *g.shape))
    write_vector_checkpoint(tmp_path / "v", v, g)
    g2, v2 = read_vector_checkpoint(tmp_path / "v.v1.hpde")
    assert g2 == g
    np.testing.assert_array_equal(v2, v)


def test_checkpoint_rejects_garbage(tmp_path):
    p = tmp_path / "bad.hpde"
    p.write_bytes(b"NOPE 1 2 3\n")
    with pytest.raises(ValueError):
        read_checkpoint(p)
    g = GridSpec(1.0, 1.0, 1.0, 4, 4, 4)
    good = write_checkpoint(tmp_path / "t.hpde", np.zeros(g.shape), g, "t")
    good.write_bytes(good.read_bytes()[:-8])
    with pytest.raises(ValueError):
        read_checkpoint(good)
