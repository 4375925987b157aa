import json

import numpy as np
import pytest

from guenterlab import geometry as geo
from guenterlab import norms
from guenterlab import registry as reg
from guenterlab import spectra as spec
from guenterlab import verify as ver
from guenterlab.errors import NoAdmissibleSamples, ProjectionCollapse
from guenterlab.fields import ScalarField


def test_generator_is_deterministic():
    g = geo.box_grid((9, 9))
    a = ver.FieldGenerator(seed=0x5EED)
    b = ver.FieldGenerator(seed=0x5EED)
    for _ in range(6):
        fa, fb = a.sample(g), b.sample(g)
        assert np.array_equal(fa.values, fb.values)
        assert a.last_family() == b.last_family()


def test_mixed_family_cycles():
    g = geo.interval_grid(17)
    gen = ver.FieldGenerator(seed=3)
    seen = [gen.sample(g) and gen.last_family() for _ in range(6)]
    assert seen[:3] == list(ver._FAMILIES)
    assert seen[3:] == list(ver._FAMILIES)


def test_mean_zero_projector():
    g = geo.box_grid((11, 11))
    gen = ver.FieldGenerator(seed=1, projector="mean-zero")
    for f in ver.generate_fields(gen, g, 8):
        assert abs(norms.mean_value(f)) < 1e-12


def test_zero_trace_projector_is_nodal_exact():
    g = geo.box_grid((9, 9))
    r = geo.mark_region(g, lambda p: p[0] < 1e-12, "boundary-part")
    gen = ver.FieldGenerator(seed=2, projector="zero-trace", region=r)
    for f in ver.generate_fields(gen, g, 8):
        assert np.all(f.values[r.node_ids] == 0.0)


def test_tangential_projector_on_sphere():
    s = geo.icosphere_mesh(1)
    gen = ver.FieldGenerator(seed=4, projector="tangential", kind="vector")
    for U in ver.generate_fields(gen, s, 5):
        defect = np.abs(np.sum(U.values * s.vertex_normals, axis=1)).max()
        assert defect < 1e-10


def test_zero_trace_without_region_rejected():
    with pytest.raises(ValueError):
        ver.FieldGenerator(projector="zero-trace")
    with pytest.raises(ValueError):
        ver.FieldGenerator(family="sinusoid")


def test_projection_collapse():
    g = geo.interval_grid(9)

    class Flat(ver.FieldGenerator):
        def sample(self, mesh, kind=None):
            return ScalarField(mesh, np.ones(mesh.n_nodes))

    gen = Flat(seed=0, projector="mean-zero")
    with pytest.raises(ProjectionCollapse):
        ver.generate_fields(gen, g, 3)


def test_verify_at_true_constant_passes():
    g = geo.interval_grid(129)
    est = spec.estimate_constant("P_domain", g)
    rep = ver.verify_inequality("P_domain", g, est.C, n_samples=60, seed=7)
    assert rep.passed
    assert rep.n_samples == 60
    assert rep.max_ratio <= est.C * (1 + 1e-6)
    assert rep.argmax_label


def test_near_extremal_sample_drives_ratio_close_to_constant():
    g = geo.interval_grid(129)
    est = spec.estimate_constant("P_domain", g)
    probe = ScalarField(g, np.cos(np.pi * g.nodes[:, 0]))
    rep = ver.verify_inequality("P_domain", g, est.C, n_samples=10, seed=1,
                                include=[probe])
    assert rep.passed
    assert rep.max_ratio > 0.99 * est.C
    assert rep.argmax_label.startswith("included")


def test_verify_at_halved_constant_fails_with_witness(tmp_path):
    g = geo.interval_grid(65)
    est = spec.estimate_constant("P_domain", g)
    probe = ScalarField(g, np.cos(np.pi * g.nodes[:, 0]))
    path = tmp_path / "witness.csv"
    rep = ver.verify_inequality("P_domain", g, est.C / 2, n_samples=10,
                                seed=1, include=[probe], witness_path=path)
    assert not rep.passed
    assert rep.witness_path == str(path)
    text = path.read_text()
    assert text.splitlines()[0].startswith("node")
    assert len(text.splitlines()) == g.n_nodes + 1


def test_zero_rhs_with_positive_lhs_auto_fails(monkeypatch):
    g = geo.interval_grid(9)
    fake = reg.Evaluator(field_kind="scalar", project=lambda f: f,
                         lhs=lambda f: 1.0, rhs=lambda f: 0.0)
    monkeypatch.setattr(reg, "build_evaluator", lambda *a, **k: fake)
    rep = ver.verify_inequality("P_domain", g, 10.0, n_samples=3, seed=0)
    assert not rep.passed
    assert np.isinf(rep.max_ratio)
    assert "rhs=0" in rep.argmax_label


def test_all_skipped_raises(monkeypatch):
    g = geo.interval_grid(9)
    fake = reg.Evaluator(field_kind="scalar", project=lambda f: f,
                         lhs=lambda f: 0.0, rhs=lambda f: 0.0)
    monkeypatch.setattr(reg, "build_evaluator", lambda *a, **k: fake)
    with pytest.raises(NoAdmissibleSamples):
        ver.verify_inequality("P_domain", g, 1.0, n_samples=3, seed=0)


def test_eigen_closure_via_verify_constant():
    for id in ("P_domain", "P_surface", "KornII"):
        cfg = reg.default_configuration(id)
        est, rep = ver.verify_constant(id, cfg["mesh"], regions=cfg["regions"],
                                       n_samples=20, seed=5)
        assert rep.passed
        assert rep.eigen_ratio is not None
        assert abs(rep.eigen_ratio - est.C) < 1e-6 * est.C


def test_grid_flip_leaves_ratios_invariant():
    g = geo.box_grid((9, 9))
    ev = reg.build_evaluator("P_domain", g, None, 2.0)
    rng = np.random.default_rng(11)
    perms = ver.shape_isometries(g)
    assert len(perms) == 2
    for _ in range(4):
        f = ev.project(ScalarField(g, rng.standard_normal(g.n_nodes)))
        r0 = ev.rhs(f) / ev.lhs(f)
        for label, perm in perms:
            fp = ev.project(ScalarField(g, f.values[perm]))
            r1 = ev.rhs(fp) / ev.lhs(fp)
            assert abs(r0 - r1) < 1e-10 * r0, label


def test_circle_rotation_leaves_ratios_invariant():
    c = geo.circle_mesh(48)
    ev = reg.build_evaluator("P_surface", c, None, 2.0)
    rng = np.random.default_rng(13)
    perms = ver.shape_isometries(c)
    assert len(perms) == 1
    f = ev.project(ScalarField(c, rng.standard_normal(c.n_nodes)))
    fp = ev.project(ScalarField(c, f.values[perms[0][1]]))
    r0 = ev.rhs(f) / ev.lhs(f)
    r1 = ev.rhs(fp) / ev.lhs(fp)
    assert abs(r0 - r1) < 1e-10 * r0


def test_cylinder_samples_constant_in_t_reduce_to_base():
    base = geo.circle_mesh(32)
    cyl = geo.extrude_cylinder(base, (0.0, 2.0), 4)
    ev_c = reg.build_evaluator("Cyl_P0", cyl,
                               {"M0": geo.extrude_region(
                                   cyl, geo.mark_region(
                                       base, lambda p: p[0] > 0.9,
                                       "subdomain"))}, 2.0)
    ev_b = reg.build_evaluator("P0_surface", base,
                               {"M0": geo.mark_region(
                                   base, lambda p: p[0] > 0.9,
                                   "subdomain")}, 2.0)
    rng = np.random.default_rng(17)
    for _ in range(4):
        vals = rng.standard_normal(base.n_nodes)
        fb = ev_b.project(ScalarField(base, vals))
        fc = ev_c.project(ScalarField(cyl, np.tile(fb.values, cyl.layers)))
        rb = ev_b.rhs(fb) / ev_b.lhs(fb)
        rc = ev_c.rhs(fc) / ev_c.lhs(fc)
        # transversally constant fields see exactly the base quotient
        assert abs(rb - rc) < 1e-10 * rb


def test_quotient_report_for_sampled_sup_bound():
    cfg = reg.default_configuration("Sup_P")
    bound, rep = ver.quotient_report("Sup_P", cfg["mesh"],
                                     regions=cfg["regions"],
                                     n_samples=40, seed=9)
    assert np.isfinite(bound) and bound > 0
    assert rep.passed
    assert rep.max_ratio <= bound * (1 + 1e-6)


def test_homogeneity_defect_is_tiny():
    for id in ("P_domain", "F_domain", "KornI"):
        cfg = reg.default_configuration(id)
        d = ver.homogeneity_defect(id, cfg["mesh"], regions=cfg["regions"],
                                   n_checks=4, seed=21)
        assert d < 1e-9


def test_report_serialization_roundtrip():
    g = geo.interval_grid(33)
    est = spec.estimate_constant("P_domain", g)
    rep = ver.verify_inequality("P_domain", g, est.C, n_samples=10, seed=2)
    payload = json.loads(rep.to_json())
    assert payload["id"] == "P_domain"
    assert payload["passed"] is True
    assert payload["n_samples"] == 10
    text = rep.to_text()
    assert "PASS" in text and "P_domain" in text
