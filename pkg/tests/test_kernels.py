import math

import numpy as np
import pytest

from maximin_lhd import kernels
from maximin_lhd.core import Configuration, InstanceSpec, build_distance_state, random_config
from maximin_lhd.evaluation import EvalParams, _weight_sums, energy, energy_psi
from maximin_lhd.mutations import dmin_after_swap, propose_from_uniforms

BACKENDS = sorted(kernels.BACKENDS)
EVALS = {
    "negdmin": EvalParams("negdmin"),
    "phi": EvalParams("phi", 10.0),
    "psi": EvalParams("psi", 10.0, 9.0, True),
    "psi-exact": EvalParams("psi", 10.0, 9.0, False),
    "psi-sub": EvalParams("psi", 5.0, 9.0, True, 12),
}
needs_cython = pytest.mark.skipif("cython" not in kernels.BACKENDS, reason="extension not built")


def walk(kern, inst, iters, seed, temp=1e-3):
    rng = np.random.default_rng(seed)
    params_width = 6 + kern.subsample
    u = rng.random((iters, params_width))
    kern.run(u, np.full(iters, temp))
    return kern


@needs_cython
@pytest.mark.parametrize("mutation", ["m2", "m3", "1dmove"])
@pytest.mark.parametrize("ev", list(EVALS))
def test_backends_bit_identical(mutation, ev):
    inst = InstanceSpec(4, 9)
    start = random_config(inst, 3).coords
    ks = {}
    for b in ("cython", "python"):
        ks[b] = walk(kernels.make_kernel(start, mutation, EVALS[ev], b), inst, 400, 8, 5e-3)
    c, p = ks["cython"], ks["python"]
    assert np.array_equal(c.get_coords(), p.get_coords())
    assert np.array_equal(c.get_best(), p.get_best())
    assert c.e_cur == p.e_cur
    assert (c.accepted, c.worse, c.worse_accepted, c.best_dmin) == (p.accepted, p.worse, p.worse_accepted, p.best_dmin)
    assert c.worse_de_sum == p.worse_de_sum
    if ev.startswith("psi") and ev != "psi-sub":
        assert np.array_equal(c.get_S(), p.get_S())


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("mutation", ["m2", "m3", "1dmove"])
def test_kernel_proposals_match_reference(backend, mutation):
    rng = np.random.default_rng(1)
    for seed in range(15):
        cfg = random_config(InstanceSpec(3, 8), seed)
        st = build_distance_state(cfg)
        kern = kernels.make_kernel(cfg.coords, mutation, EVALS["phi"], backend)
        for _ in range(10):
            u = rng.random(5)
            ref = propose_from_uniforms(mutation, cfg, st, u)
            assert kern.propose(u) == (ref.i, ref.j, ref.dim)


@pytest.mark.parametrize("backend", BACKENDS)
def test_kernel_dmin_after_matches_reference(backend):
    rng = np.random.default_rng(2)
    cfg = random_config(InstanceSpec(4, 10), 5)
    st = build_distance_state(cfg)
    kern = kernels.make_kernel(cfg.coords, "m3", EVALS["phi"], backend)
    for _ in range(50):
        i, j = (int(x) for x in rng.choice(10, 2, replace=False))
        d = int(rng.integers(4))
        assert kern.dmin_after(i, j, d) == dmin_after_swap(cfg, st, i, j, d)
    assert np.array_equal(kern.get_coords(), cfg.coords)


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("ev", ["negdmin", "phi", "psi", "psi-exact"])
def test_kernel_state_and_energy_match_full_recompute(backend, ev):
    inst = InstanceSpec(4, 9)
    params = EVALS[ev]
    kern = walk(kernels.make_kernel(random_config(inst, 4).coords, "1dmove", params, backend), inst, 300, 6, 1e-2)
    cfg = Configuration(inst, kern.get_coords())
    st = build_distance_state(cfg)
    assert np.array_equal(kern.get_dsq(), st.dsq)
    assert kern.dmin == st.dmin_sq
    assert np.array_equal(np.bincount(st.values(), minlength=inst.max_dsq + 1), kern.get_cnt())
    assert kern.e_cur == pytest.approx(energy(st, params), rel=1e-9)
    assert kern.energy() == pytest.approx(energy(st, params), rel=1e-9)


@pytest.mark.parametrize("backend", BACKENDS)
def test_kernel_weight_sums_match_reference(backend):
    inst = InstanceSpec(4, 9)
    kern = walk(kernels.make_kernel(random_config(inst, 7).coords, "m2", EVALS["psi-exact"], backend), inst, 200, 3)
    vals = build_distance_state(Configuration(inst, kern.get_coords())).values().astype(float)
    ref = _weight_sums(vals, vals, 9.0, False, None)
    assert np.allclose(kern.get_S()[vals.astype(int)], ref, rtol=1e-10)


def test_subsample_energy_uses_reference_pairs():
    inst = InstanceSpec(3, 7)
    params = EVALS["psi-sub"]
    cfg = random_config(inst, 2)
    kern = kernels.make_kernel(cfg.coords, "1dmove", params, "python")
    vals = build_distance_state(cfg).values()
    refs = [0, 3, 3, 5, 7, 11, 13, 20, 1, 2, 4, 6]
    kern.refs = list(refs)
    ktab = kernels.build_tables(3, 7, params)[2]
    sums = np.array([sum(ktab[abs(int(vals[r]) - int(v))] for r in refs) for v in vals])
    sums = np.maximum(sums * len(vals) / len(refs), 1.0)
    want = float(np.sum(vals.astype(float) ** -2.5 / np.sqrt(sums)) ** 0.2)
    assert kern.energy() == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
def test_phi_running_sum_tracks_full_value(backend):
    inst = InstanceSpec(6, 15)
    kern = kernels.make_kernel(random_config(inst, 1).coords, "1dmove", EVALS["phi"], backend)
    rng = np.random.default_rng(0)
    for _ in range(5):  # checkpoints without any resync in between
        kern.run(rng.random((400, 6)), np.full(400, 1e-2))
        st = build_distance_state(Configuration(inst, kern.get_coords()))
        assert kern.e_cur == pytest.approx(energy(st, EVALS["phi"]), rel=1e-9)


@pytest.mark.parametrize("backend", BACKENDS)
def test_zero_temperature_never_worsens(backend):
    inst = InstanceSpec(5, 12)
    kern = kernels.make_kernel(random_config(inst, 0).coords, "1dmove", EVALS["phi"], backend)
    start = kern.best_dmin
    walk(kern, inst, 500, 1, temp=0.0)
    assert kern.worse_accepted == 0 and kern.worse > 0
    assert kern.best_dmin >= start
    best = build_distance_state(Configuration(inst, kern.get_best()))
    assert best.dmin_sq == kern.best_dmin


@pytest.mark.parametrize("backend", BACKENDS)
def test_infinite_temperature_accepts_all(backend):
    inst = InstanceSpec(5, 12)
    kern = kernels.make_kernel(random_config(inst, 0).coords, "m2", EVALS["phi"], backend)
    walk(kern, inst, 300, 1, temp=math.inf)
    assert kern.accepted == kern.iterations == 300


def test_build_tables_cutoff():
    params = EvalParams("psi", 5.0, 10.0, True)
    kind, ftab, ktab, window, sub = kernels.build_tables(2, 10, params)
    assert window == kernels.cutoff_radius(10.0) == 22
    assert ktab[22] > 0 and ktab[23] == 0
    assert ftab[0] == 0 and ftab[4] == pytest.approx(4 ** -2.5)
    assert kernels.build_tables(2, 10, EvalParams("psi", 5.0, 10.0, False))[3] == 2 * 81


def test_uniform_width():
    assert kernels.uniforms_per_iteration(EVALS["phi"]) == 6
    assert kernels.uniforms_per_iteration(EVALS["psi-sub"]) == 18


def test_backend_env(monkeypatch):
    monkeypatch.setenv("LHD_BACKEND", "python")
    assert kernels._default_backend() == "python"
    monkeypatch.setenv("LHD_BACKEND", "bogus")
    with pytest.raises(ValueError):
        kernels._default_backend()
    assert kernels.kernel_class("python") is kernels.PyKernel


def test_kernel_psi_energy_matches_reference_function():
    cfg = random_config(InstanceSpec(5, 10), 9)
    st = build_distance_state(cfg)
    for backend in BACKENDS:
        for cut in (True, False):
            kern = kernels.make_kernel(cfg.coords, "1dmove", EvalParams("psi", 5.0, 20.0, cut), backend)
            assert kern.energy() == pytest.approx(energy_psi(st, 5.0, 20.0, cut), rel=1e-12)


def test_fallback_when_extension_missing():
    import subprocess
    import sys

    code = (
        "import sys; sys.modules['maximin_lhd._ckernel'] = None\n"
        "from maximin_lhd import kernels\n"
        "assert kernels.CKernel is None and kernels.BACKEND == 'python'\n"
        "assert sorted(kernels.BACKENDS) == ['python']\n"
    )
    proc = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
