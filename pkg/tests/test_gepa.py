import json
import random

import pytest

from gepacc.dataset import DatasetSplit, TaskInstance
from gepacc.errors import EmptyPoolError
from gepacc.gepa import (
    OptimizerConfig,
    ParetoState,
    PromptCandidate,
    accept_or_reject,
    pareto_update,
    propose_merge,
    propose_mutation,
    rollout,
    run_optimization,
    select_final,
    select_parent,
)
from gepacc.llm import ModelConfig, mock_script

GOLD_LP = "#pragma acc parallel loop collapse(2)"


def make_tasks(n, kind="LP", gold=GOLD_LP):
    tag = "<LP_PRAGMA>" if kind == "LP" else "<DM_PRAGMA>"
    return [
        TaskInstance(
            id=f"t{i:02d}",
            kind=kind,
            source=f"// case t{i:02d}\nint main(void) {{\n{tag}\nfor(;;);\n}}",
            gold=gold,
        )
        for i in range(n)
    ]


def gold_echo_student(tasks):
    return mock_script([(t.id, t.gold) for t in tasks])


def candidate(cid, scores, born_at=0, text="p"):
    c = PromptCandidate(id=cid, text=text, born_at=born_at)
    c.set_scores(scores)
    return c


def build_state(*candidates):
    state = ParetoState()
    for c in candidates:
        state = pareto_update(state, c)
    return state


class TestRollout:
    def test_gold_echo_scores_one(self):
        tasks = make_tasks(4)
        results = rollout(PromptCandidate(0, "prompt"), tasks, gold_echo_student(tasks))
        assert [r.score for r in results] == [1.0, 1.0, 1.0, 1.0]
        assert all(r.error is None for r in results)

    def test_unparseable_scores_zero(self):
        tasks = make_tasks(1)
        student = mock_script([("", "#pragma acc nonsense foo")])
        results = rollout(PromptCandidate(0, "prompt"), tasks, student)
        assert results[0].score == 0.0
        assert "ParseError" in results[0].error
        assert "ParseError" in results[0].feedback_text

    def test_extraction_failure_scores_zero(self):
        tasks = make_tasks(1)
        student = mock_script([("", "no pragma here")])
        results = rollout(PromptCandidate(0, "prompt"), tasks, student)
        assert results[0].score == 0.0
        assert "ExtractionError" in results[0].error

    def test_order_independence(self):
        tasks = make_tasks(4)
        student = mock_script(
            [("t00", tasks[0].gold), ("t01", "#pragma acc loop")],
            default="#pragma acc kernels",
        )
        forward = rollout(PromptCandidate(0, "p"), tasks, student)
        backward = rollout(PromptCandidate(0, "p"), list(reversed(tasks)), student)
        by_id_fwd = {r.task.id: r.score for r in forward}
        by_id_bwd = {r.task.id: r.score for r in backward}
        assert by_id_fwd == by_id_bwd

    def test_parallel_matches_serial(self):
        tasks = make_tasks(6)
        student = gold_echo_student(tasks)
        serial = rollout(PromptCandidate(0, "p"), tasks, student, parallelism=1)
        threaded = rollout(PromptCandidate(0, "p"), tasks, student, parallelism=4)
        assert [r.score for r in serial] == [r.score for r in threaded]


class TestSelectParent:
    def test_win_weighted_sampling(self):
        a = candidate(0, [1.0, 1.0, 1.0, 0.2])
        b = candidate(1, [0.2, 0.2, 0.2, 1.0])
        state = build_state(a, b)
        rng = random.Random(42)
        draws = [select_parent(state, rng).id for _ in range(10_000)]
        assert draws.count(0) / 10_000 == pytest.approx(0.75, abs=0.02)
        assert draws.count(1) / 10_000 == pytest.approx(0.25, abs=0.02)

    def test_equal_winners_split_evenly(self):
        a = candidate(0, [1.0, 0.2])
        b = candidate(1, [0.2, 1.0])
        state = build_state(a, b)
        rng = random.Random(7)
        draws = [select_parent(state, rng).id for _ in range(10_000)]
        assert draws.count(0) / 10_000 == pytest.approx(0.5, abs=0.02)

    def test_single_candidate(self):
        state = build_state(candidate(3, [0.5]))
        assert select_parent(state, random.Random(0)).id == 3

    def test_empty_pool(self):
        with pytest.raises(EmptyPoolError):
            select_parent(ParetoState(), random.Random(0))


class TestProposals:
    def test_mutation_echo(self):
        parent = candidate(0, [0.5], text="base prompt")
        reflection = ModelConfig(backend="mock", mock_reflection="echo")
        traces = [("src", "#pragma acc loop", GOLD_LP, "SCORE 0.5")]
        child = propose_mutation(parent, traces, reflection, new_id=9, born_at=4)
        assert child.text == parent.text
        assert child.id == 9
        assert child.parents == (0,)
        assert child.per_instance_scores == []

    def test_mutation_append_actions_grows_prompt(self):
        parent = candidate(0, [0.5], text="base prompt")
        reflection = ModelConfig(backend="mock", mock_reflection="append_actions")
        traces = [
            ("src", "#pragma acc parallel loop", GOLD_LP,
             "SCORE 0.840\n- [MISSING_COLLAPSE] hint | Add collapse(2) clause.")
        ]
        child = propose_mutation(parent, traces, reflection, new_id=1, born_at=0)
        assert len(child.text) > len(parent.text)
        assert "Add collapse(2) clause." in child.text

    def test_merge_contains_both_markers(self):
        a = candidate(0, [1.0, 0.0], text="ALPHA-MARKER rules")
        b = candidate(1, [0.0, 1.0], text="BETA-MARKER rules")
        reflection = ModelConfig(backend="mock", mock_merge="concat")
        child = propose_merge(a, b, reflection, new_id=2, born_at=0)
        assert "ALPHA-MARKER" in child.text and "BETA-MARKER" in child.text
        assert child.parents == (0, 1)

    def test_merge_with_itself_rejected(self):
        a = candidate(0, [1.0], text="x")
        with pytest.raises(ValueError):
            propose_merge(a, a, ModelConfig(backend="mock"), new_id=1, born_at=0)


class TestAcceptOrReject:
    def test_strict_improvement(self):
        assert accept_or_reject([1.0, 1.0], [0.5, 0.5])

    def test_equal_means_rejected(self):
        assert not accept_or_reject([0.7, 0.7], [0.7, 0.7])

    def test_lower_mean_rejected_despite_one_win(self):
        assert not accept_or_reject([1.0, 0.0], [0.6, 0.6])


class TestParetoUpdate:
    def test_incomparable_both_on_frontier(self):
        state = build_state(candidate(0, [1.0, 0.5]), candidate(1, [0.5, 1.0]))
        assert state.frontier == {0, 1}

    def test_dominated_removed(self):
        state = build_state(candidate(0, [1.0, 0.5]), candidate(1, [1.0, 1.0]))
        assert state.frontier == {1}
        assert [c.id for c in state.pool] == [1]

    def test_duplicate_vectors_both_retained(self):
        state = build_state(candidate(0, [0.5, 0.5]), candidate(1, [0.5, 0.5]))
        assert state.frontier == {0, 1}

    def test_per_instance_best(self):
        state = build_state(candidate(0, [1.0, 0.2]), candidate(1, [0.8, 0.9]))
        assert state.per_instance_best[0] == (1.0, {0})
        assert state.per_instance_best[1] == (0.9, {1})

    def test_brute_force_oracle(self):
        rng = random.Random(55)
        levels = [0.0, 0.25, 0.5, 0.75, 1.0]
        for _ in range(1000):
            n = rng.randint(1, 8)
            m = rng.randint(1, 8)
            vectors = [[rng.choice(levels) for _ in range(m)] for _ in range(n)]
            state = ParetoState()
            for cid, vec in enumerate(vectors):
                state = pareto_update(state, candidate(cid, vec))

            def dominates(a, b):
                return all(x >= y for x, y in zip(a, b)) and any(
                    x > y for x, y in zip(a, b)
                )

            expected = {
                i
                for i, vec in enumerate(vectors)
                if not any(dominates(other, vec) for j, other in enumerate(vectors) if j != i)
            }
            assert state.frontier == expected


class TestSelectFinal:
    def test_max_mean(self):
        state = build_state(candidate(0, [1.0, 0.8]), candidate(1, [0.9, 0.5]))
        assert select_final(state).id == 0

    def test_tie_break_earliest_birth(self):
        a = candidate(0, [0.8, 0.8], born_at=5)
        b = candidate(1, [0.8, 0.8], born_at=2)
        state = build_state(a, b)
        assert select_final(state).id == 1

    def test_single_survivor(self):
        state = build_state(candidate(4, [0.3]))
        assert select_final(state).id == 4

    def test_empty(self):
        with pytest.raises(EmptyPoolError):
            select_final(ParetoState())


PLANT_TOKEN = "COLLAPSE-RULE"
GOLD_PLANT = "#pragma acc kernels collapse(2)"
WRONG_PRED = "#pragma acc parallel loop"


def planted_setup():
    tasks = make_tasks(4, gold=GOLD_PLANT)
    data = DatasetSplit(train=tasks[:2], pareto=tasks[2:])
    student = mock_script([(PLANT_TOKEN, GOLD_PLANT)], default=WRONG_PRED)

    def plant_reflection(prompt, traces):
        if any("MISSING_COLLAPSE" in feedback for *_ignored, feedback in traces):
            return prompt + "\n" + PLANT_TOKEN
        return prompt

    reflection = ModelConfig(backend="mock", mock_reflection=plant_reflection)
    cfg = OptimizerConfig(budget=50, minibatch_size=2, merge_probability=0.0, rng_seed=7)
    return data, student, reflection, cfg


class TestRunOptimization:
    def test_planted_token_converges(self):
        data, student, reflection, cfg = planted_setup()
        best, events = run_optimization("seed prompt", data, student, reflection, cfg)
        assert PLANT_TOKEN in best.text
        assert best.mean_score == 1.0
        assert events[-1]["budget_used"] <= 50

    def test_budget_equals_pareto_returns_seed(self):
        data, student, reflection, _ = planted_setup()
        cfg = OptimizerConfig(budget=len(data.pareto), minibatch_size=2, rng_seed=7)
        best, events = run_optimization("seed prompt", data, student, reflection, cfg)
        assert best.text == "seed prompt"
        assert events[-1]["budget_used"] == len(data.pareto)

    def test_same_seed_identical_logs(self):
        data, student, reflection, cfg = planted_setup()
        _, first = run_optimization("seed prompt", data, student, reflection, cfg)
        _, second = run_optimization("seed prompt", data, student, reflection, cfg)
        assert json.dumps(first) == json.dumps(second)

    def test_budget_accounting(self):
        data, student, reflection, cfg = planted_setup()
        _, events = run_optimization("seed prompt", data, student, reflection, cfg)
        total = sum(len(e["tasks"]) for e in events if e["event"] == "rollout")
        assert total == events[-1]["budget_used"]
        assert total <= cfg.budget

    def test_seed_never_regresses(self):
        data, student, reflection, cfg = planted_setup()
        best, _ = run_optimization("seed prompt", data, student, reflection, cfg)
        assert best.mean_score >= 0.4  # seed scores 0.4 on every instance

    def test_config_validation_before_any_call(self):
        data, student, reflection, _ = planted_setup()
        cfg = OptimizerConfig(budget=1, minibatch_size=2, rng_seed=0)
        with pytest.raises(ValueError):
            run_optimization("seed", data, student, reflection, cfg)
        cfg = OptimizerConfig(budget=50, minibatch_size=99, rng_seed=0)
        with pytest.raises(ValueError):
            run_optimization("seed", data, student, reflection, cfg)

    def test_merge_path_runs(self):
        tasks = make_tasks(6, gold=GOLD_PLANT)
        data = DatasetSplit(train=tasks[:3], pareto=tasks[3:])
        student = mock_script([(PLANT_TOKEN, GOLD_PLANT)], default=WRONG_PRED)

        def plant_reflection(prompt, traces):
            if any("MISSING_COLLAPSE" in fb for *_ignored, fb in traces):
                return prompt + "\n" + PLANT_TOKEN
            return prompt

        reflection = ModelConfig(
            backend="mock", mock_reflection=plant_reflection, mock_merge="concat"
        )
        cfg = OptimizerConfig(budget=80, minibatch_size=2, merge_probability=0.5, rng_seed=3)
        best, events = run_optimization("seed prompt", data, student, reflection, cfg)
        assert best.mean_score == 1.0
        assert events[-1]["budget_used"] <= 80

    def test_reflection_failure_skips_iteration(self):
        data, student, _, cfg = planted_setup()
        blank_reflection = ModelConfig(backend="mock", mock_reflection=lambda p, t: "")
        best, events = run_optimization("seed prompt", data, student, blank_reflection, cfg)
        assert best.text == "seed prompt"
        failures = [e for e in events if e["event"] == "proposal_failed"]
        assert failures
        # each failed iteration charges only the parent minibatch
        rollouts = [e for e in events if e["event"] == "rollout"]
        assert all(e["phase"] in ("seed", "parent_minibatch") for e in rollouts)
        assert events[-1]["budget_used"] <= cfg.budget

    def test_best_so_far_monotone(self):
        # pruning removes only dominated members, so the pool's max mean can
        # never drop: the final candidate carries the max evaluated mean
        data, student, reflection, cfg = planted_setup()
        _, events = run_optimization("seed prompt", data, student, reflection, cfg)
        evaluated_means = [
            sum(e["scores"]) / len(e["scores"])
            for e in events
            if e["event"] == "rollout" and e["phase"] in ("seed", "pareto_eval")
        ]
        final = events[-1]["mean_score"]
        assert final == pytest.approx(max(evaluated_means))
        assert final >= evaluated_means[0]
