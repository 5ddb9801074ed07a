"""Smoke test for the Python bindings.

Build and install first:
    pip install maturin
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/mediamod_py-*.whl
"""

import math

import mediamod_py as mm


def close(a, b, rel):
    return abs(a - b) <= rel * abs(b)


def main():
    cfg = mm.Config()
    assert close(cfg.sampling_time, 20.0, 1e-12), cfg.sampling_time
    assert close(cfg.p_tx, 0.1, 1e-12)

    lhs, rhs, ratio, ok = cfg.static_assumption()
    assert ok and abs(lhs - 5.1e-5) < 1e-6, (lhs, rhs, ratio)

    model = mm.SwitchingModel(cfg)
    p = model.switch_probability(100.0)
    assert abs(p - 0.1126) < 5e-4, p
    assert close(model.n_b(100.0, 5e-3), model.n_b_ode(100.0, 5e-3), 1e-6)

    ch = mm.Channel(cfg)
    h = ch.hit_probability(20.0)
    assert abs(h - 0.999) < 1e-3, h
    assert abs(h - ch.hit_probability_quadrature(20.0)) < 1e-9

    n_sys, p_tx, p_switch, h_ts = mm.link_params(cfg)
    p_r = p_tx * p_switch * h_ts
    pmf_sum = sum(mm.binomial_pmf(n_sys, p_r, k) for k in range(n_sys + 1))
    assert abs(pmf_sum - 1.0) < 1e-9, pmf_sum
    assert close(mm.ber_analytic(n_sys, p_r), 0.5 * mm.binomial_pmf(n_sys, p_r, 0), 1e-12)

    floor = mm.ber_analytic(10, 0.999 * 0.1)
    assert close(floor, 0.5 * 0.9001**10, 1e-12), floor
    emp = mm.ber_empirical(10, 0.0999, 200_000, seed=1)
    lo, hi = emp["ci95"]
    assert lo <= floor <= hi, emp
    assert emp["false_positives"] == 0

    ens = mm.run_ensemble(cfg.with_override("n_realizations=200"), times=[10.0, 20.0])
    assert len(ens["n_rx_at_ts"]) == 200
    mean = sum(ens["n_rx_at_ts"]) / 200
    assert abs(mean - mm.expected_cir(cfg, 20.0)) < 5 * math.sqrt(11.25 / 200) + 0.5, mean
    again = mm.run_ensemble(cfg.with_override("n_realizations=200"), times=[10.0, 20.0])
    assert again["n_rx_at_ts"] == ens["n_rx_at_ts"]

    try:
        mm.Config(["bogus=1"])
    except ValueError:
        pass
    else:
        raise AssertionError("unknown key accepted")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
