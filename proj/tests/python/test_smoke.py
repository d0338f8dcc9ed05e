"""End-to-end checks of the python bindings against known model behaviour."""

import math
import os

import pytest

import blrm

REPO = os.environ.get("BLRM_REPO", os.path.join(os.path.dirname(__file__), "..", ".."))


def two_drug_model(variant="saturating"):
    return blrm.make_model([("A", 200.0), ("B", 200.0)], variant)


def test_model_construction_and_probabilities():
    spec = two_drug_model()
    assert spec.n_drugs == 2
    assert spec.variant == "saturating"
    assert spec.param_dim == 5
    assert [t.members for t in spec.terms] == [[0, 1]]

    params = blrm.ParameterVector()
    params.log_alpha = [math.log(0.10 / 0.90)] * 2
    params.log_beta = [0.0, 0.0]
    params.eta = [0.0]

    # With a neutral interaction the combination follows independence.
    pi = blrm.model_prob(spec, params, [200.0, 200.0])
    assert pi == pytest.approx(1.0 - 0.9 * 0.9, abs=1e-12)
    # A zero dose drops the drug from the combination.
    assert blrm.model_prob(spec, params, [200.0, 0.0]) == pytest.approx(0.10, abs=1e-12)
    assert blrm.model_prob(spec, params, [0.0, 0.0]) == 0.0


def test_interaction_subsets_match_powerset():
    subsets = blrm.interaction_subsets(3)
    assert [s.members for s in subsets] == [[0, 1], [0, 2], [1, 2], [0, 1, 2]]


def test_fit_decisions_and_determinism():
    spec = two_drug_model()
    priors = blrm.standard_priors(spec, sigma_inter=1.5)
    data = blrm.historical_data() + [
        blrm.CohortRecord([200.0, 200.0], 5, 0, "combo")
    ]

    cfg = blrm.SamplerConfig()
    cfg.seed = 7
    draws = blrm.run_mcmc(data, spec, priors, cfg)
    assert draws.converged
    assert draws.n_rows == cfg.chains * cfg.sampling_iters
    assert max(draws.rhat) <= 1.01
    arr = draws.array()
    assert arr.shape == (draws.n_rows, spec.param_dim)

    row = blrm.summarize_point(draws, spec, [200.0, 200.0])
    assert 0.0 < row.mean_pi < 1.0
    assert row.p_under + row.p_target + row.p_over == pytest.approx(1.0, abs=1e-12)
    assert row.ewoc_ok == blrm.ewoc_satisfied(row.p_over)

    grid = blrm.cartesian_grid([[100.0, 200.0], [100.0, 200.0]])
    rows = blrm.evaluate_grid(draws, spec, grid)
    assert [r.doses for r in rows] == grid
    # Posterior overdose probability grows along the diagonal.
    assert rows[0].p_over < rows[-1].p_over

    marg = blrm.marginal_summary(draws, spec, 1, blrm.default_dose_ladder())
    assert all(r.doses[0] == 0.0 for r in marg)

    again = blrm.run_mcmc(data, spec, priors, cfg)
    assert again.array().tolist() == arr.tolist()

    csv = blrm.surface_csv(rows, [d.name for d in spec.drugs])
    assert csv.splitlines()[0] == (
        "dose_A,dose_B,p_under,p_target,p_over,mean_pi,q025,q50,q975,ewoc_ok"
    )


def test_property_matrix_reproduces_reference():
    assert blrm.property_matrix_ok(seed=1)
    table = blrm.property_matrix(seed=1)
    assert "saturating" in table and "thall" in table


def test_scenario_flags():
    res = blrm.run_scenario("5/5@200", seed=1)
    assert res.scenario == "5/5@200"
    by_tag = {vr.variant.tag: vr for vr in res.variants}
    assert len(by_tag) == 7
    # Five DLTs in five patients at the combination: no variant escalates.
    assert all(vr.ewoc_at_combo is False for vr in by_tag.values())
    # Wide interaction priors absorb the surprise into the interaction
    # coefficients; rigid variants drag the single-agent curves with them.
    assert by_tag["thall2003-wide"].marginal_preserved
    assert not by_tag["no-interaction"].marginal_preserved
    assert (
        by_tag["saturating-s15"].max_marginal_shift
        < by_tag["saturating-s05"].max_marginal_shift
    )


def test_config_round_trip_and_cohort_io():
    cfg = blrm.load_config(os.path.join(REPO, "configs", "two-drug-saturating.json"))
    assert cfg.model.variant == "saturating"
    assert cfg.sampler.chains == 4
    assert cfg.priors.eta[0].sd == 1.5
    assert blrm.parse_config(blrm.serialize_config(cfg)).grid_axes() == cfg.grid_axes()

    cohorts = blrm.load_cohorts(os.path.join(REPO, "data", "historical.csv"), cfg.model)
    assert cohorts == blrm.historical_data()

    with pytest.raises(blrm.ConfigError):
        blrm.parse_config("{\"model\": {}}")


def test_unconverged_draws_are_refused():
    spec = two_drug_model()
    priors = blrm.standard_priors(spec, sigma_inter=1.5)
    cfg = blrm.SamplerConfig()
    cfg.warmup_iters = 10
    cfg.sampling_iters = 8
    draws = blrm.run_mcmc(blrm.historical_data(), spec, priors, cfg)
    assert not draws.converged
    with pytest.raises(blrm.NotConvergedError):
        blrm.evaluate_grid(draws, spec, [[100.0, 100.0]])
    # The explicit override still works.
    rows = blrm.evaluate_grid(draws, spec, [[100.0, 100.0]], force_unconverged=True)
    assert len(rows) == 1
