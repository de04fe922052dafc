import pytest

from semwidth.core.approximation import WidthClass, mua_hom_bounded
from semwidth.core.automata import Letter, Nfa, parse_regex
from semwidth.core.formats import parse_queries
from semwidth.core.morphism import is_isomorphic
from semwidth.core.query_model import Atom, C2rpq, Uc2rpq
from semwidth.core.semantics import (
    VerdictKind,
    check_under_approximation,
    contained_bounded,
    cq_contained,
    decide_semantic_width,
    equivalent_bounded,
)
from semwidth.errors import ArityMismatchError, NotACQError
from semwidth.models import Limits


def query(*atoms: tuple[str, str, str], output: tuple[str, ...] = (), name: str = "q") -> C2rpq:
    return C2rpq.of([Atom(s, parse_regex(r), d) for s, r, d in atoms], output, name=name)


@pytest.fixture
def star_back(fixtures_dir) -> Uc2rpq:
    return parse_queries((fixtures_dir / "star_back.q").read_text())["star_back"]


@pytest.fixture
def ladder(fixtures_dir) -> Uc2rpq:
    return parse_queries((fixtures_dir / "ladder.q").read_text())["ladder"]


class TestCqContained:
    def test_path_in_a_regular_atom(self):
        xi = query(("x", "a", "u"), ("u", "b", "y"), output=("x", "y"))
        assert cq_contained(xi, query(("x", "a.b", "y"), output=("x", "y")))
        assert not cq_contained(xi, query(("x", "a.a", "y"), output=("x", "y")))

    def test_inverse_letters_walk_backwards(self):
        xi = query(("x", "a", "u"), ("y", "a", "u"), output=("x", "y"))
        assert cq_contained(xi, query(("x", "a.a^-", "y"), output=("x", "y")))

    def test_repeated_outputs(self):
        xi = query(("x", "a", "u"), output=("x", "u"))
        assert not cq_contained(xi, query(("z", "a", "z"), output=("z", "z")))

    def test_empty_union(self):
        assert not cq_contained(query(("x", "a", "y")), None)

    def test_arity_mismatch(self):
        with pytest.raises(ArityMismatchError):
            cq_contained(query(("x", "a", "y"), output=("x",)), query(("x", "a", "y")))

    def test_needs_a_cq(self):
        with pytest.raises(NotACQError):
            cq_contained(query(("x", "a*", "y")), query(("x", "a", "y")))


class TestContainedBounded:
    def test_star_back_witness(self, star_back):
        # Setup
        approximation = mua_hom_bounded(star_back, WidthClass.parse("tw", 1), 1)
        images = Uc2rpq(tuple(d for d in approximation.disjuncts if d.is_cq), "images")

        # Execute
        verdict = contained_bounded(star_back, images, word_bound=4)

        # Verify
        assert verdict.kind is VerdictKind.NO
        assert verdict.exact
        expected = query(("x", "a", "z"), ("z", "a", "y"), ("y", "b", "x"), output=("x", "y"))
        assert is_isomorphic(verdict.witness, expected)
        assert verdict.witness_words == ((Letter("a"), Letter("a")), (Letter("b"),))

    def test_shortest_counterexample_first(self):
        verdict = contained_bounded(query(("x", "a*", "y"), output=("x", "y")), query(("x", "a+", "y"), output=("x", "y")), 3)
        assert verdict.kind is VerdictKind.NO
        assert verdict.witness_words == ((),)
        assert verdict.witness.output == ("x", "x")

    def test_simple_languages_make_the_answer_exact(self):
        verdict = contained_bounded(query(("x", "a*", "y"), output=("x", "y")), query(("x", "a*|b", "y"), output=("x", "y")), 6)
        assert verdict.kind is VerdictKind.YES
        assert verdict.exact

    def test_finite_languages_make_the_answer_exact(self):
        verdict = contained_bounded(query(("x", "a.b|b", "y")), query(("x", "a.b|b|c", "y")), 2)
        assert verdict.kind is VerdictKind.YES
        assert verdict.exact

    def test_unbounded_languages_stay_open(self):
        verdict = contained_bounded(query(("x", "(a.a)*", "y"), output=("x", "y")), query(("x", "a*", "y"), output=("x", "y")), 4)
        assert verdict.kind is VerdictKind.NO_COUNTEREXAMPLE_UP_TO
        assert not verdict.exact
        assert verdict.bound == 4

    def test_homomorphism_shortcut(self):
        gamma = query(("x", "(a.a)*", "y"), ("y", "b", "z"), output=("x",), name="gamma")
        delta = query(("x", "(a.a)*", "y"), output=("x",), name="delta")
        verdict = contained_bounded(gamma, delta, 0)
        assert verdict.kind is VerdictKind.YES
        assert verdict.notes == ("gamma: covered by a homomorphism from delta",)

    def test_empty_languages_are_settled_before_homomorphisms(self):
        dead = Nfa.build([(0, "a", 1)], initial=[0], final=[])
        gamma = C2rpq.of([Atom("x", dead, "y")], ("x",), name="gamma")
        verdict = contained_bounded(gamma, gamma, 0)
        assert verdict.kind is VerdictKind.YES
        assert verdict.notes == ("gamma: has an empty atom language",)

    @pytest.mark.parametrize(
        "shorter, longer",
        [("a.a.a.a.a", "a.a.a.a.a.a"), ("a.a.a.a.a.b*", "a.a.a.a.a.a.b*")],
    )
    def test_paths_one_edge_short_are_not_contained(self, shorter, longer):
        # Setup
        five = query(("x", shorter, "y"), output=("x", "y"), name="five")
        six = query(("x", longer, "y"), output=("x", "y"), name="six")

        # Execute
        verdict = contained_bounded(five, six, 6)

        # Verify
        assert verdict.kind is VerdictKind.NO
        assert verdict.exact
        assert verdict.witness_words == ((Letter("a"),) * 5,)
        assert not any("homomorphism" in note for note in verdict.notes)

    def test_cq_left_side(self):
        verdict = contained_bounded(query(("x", "a", "y"), output=("x",)), query(("x", "b", "y"), output=("x",)), 0)
        assert verdict.kind is VerdictKind.NO
        assert verdict.witness_words == ((Letter("a"),),)

    def test_empty_right_side(self):
        verdict = contained_bounded(query(("x", "a*", "y")), None, 2)
        assert verdict.kind is VerdictKind.NO

    def test_expansion_cap(self, star_back):
        approximation = mua_hom_bounded(star_back, WidthClass.parse("tw", 1), 1)
        verdict = contained_bounded(star_back, approximation.union, 8, Limits(max_expansions=1))
        assert verdict.kind is VerdictKind.NO_COUNTEREXAMPLE_UP_TO
        assert verdict.caps_hit == ("max_expansions",)

    def test_arity_mismatch(self):
        with pytest.raises(ArityMismatchError):
            contained_bounded(query(("x", "a*", "y"), output=("x",)), query(("x", "a", "y")), 2)

    def test_verdict_to_dict(self):
        verdict = contained_bounded(query(("x", "a*", "y"), output=("x", "y")), query(("x", "a+", "y"), output=("x", "y")), 3)
        data = verdict.to_dict()
        assert data["kind"] == "No"
        assert data["exact"] is True
        assert data["witness_words"] == ["<eps>"]
        assert "witness" in data and data["bound"] == 3


class TestEquivalentBounded:
    def test_atom_and_its_path(self):
        a = query(("x", "a.b", "y"), output=("x", "y"))
        b = query(("x", "a", "u"), ("u", "b", "y"), output=("x", "y"))
        verdict = equivalent_bounded(a, b, 2)
        assert verdict.kind is VerdictKind.YES
        assert verdict.exact

    def test_paths_of_lengths_five_and_six_differ(self):
        five = query(("x", "a.a.a.a.a", "y"), output=("x", "y"), name="five")
        six = query(("x", "a.a.a.a.a.a", "y"), output=("x", "y"), name="six")
        verdict = equivalent_bounded(five, six, 6)
        assert verdict.kind is VerdictKind.NO
        assert verdict.exact

    def test_backward_counterexample(self):
        a = query(("x", "a+", "y"), output=("x", "y"))
        b = query(("x", "a*", "y"), output=("x", "y"))
        verdict = equivalent_bounded(a, b, 3)
        assert verdict.kind is VerdictKind.NO
        assert verdict.witness_words == ((),)

    def test_open_answers_carry_both_directions(self):
        a = query(("x", "(a.a)*", "y"), output=("x", "y"))
        b = query(("x", "(a.a)*", "u"), ("u", "(a.a)*", "y"), output=("x", "y"))
        verdict = equivalent_bounded(a, b, 4)
        assert verdict.kind is VerdictKind.NO_COUNTEREXAMPLE_UP_TO
        assert verdict.bound == 4


class TestUnderApproximationCheck:
    def test_empty_approximation_is_sound(self):
        assert check_under_approximation(query(("x", "a", "y")), None)

    def test_computed_approximation_is_sound(self, star_back):
        approximation = mua_hom_bounded(star_back, WidthClass.parse("tw", 1), 2)
        assert check_under_approximation(star_back, approximation.union, seed=3)

    def test_wrong_approximation_is_caught(self):
        gamma = query(("x", "a", "y"), output=("x", "y"))
        wrong = Uc2rpq.of(query(("x", "b", "y"), output=("x", "y")))
        assert not check_under_approximation(gamma, wrong, Limits(spot_check_dbs=50))


class TestDecide:
    def test_triangle_has_semantic_tree_width_one(self, fixtures_dir):
        triangle = parse_queries((fixtures_dir / "triangle.q").read_text())["triangle"]
        decision = decide_semantic_width(triangle, WidthClass.parse("tw", 1), 1, 4)
        assert decision.verdict.kind is VerdictKind.YES
        assert decision.exact_for_width
        assert str(decision.cls_used) == "ctw1"
        assert decision.spot_check

    def test_ladder_two_way_path_width(self, ladder):
        decision = decide_semantic_width(ladder, WidthClass.parse("pw", 2), 1, 2)
        assert decision.verdict.kind is VerdictKind.YES
        assert decision.exact_for_width
        assert str(decision.cls_used) == "cpw2"

    def test_ladder_one_way_path_width(self, ladder):
        # Execute
        decision = decide_semantic_width(ladder, WidthClass.parse("pw", 2), 1, 2, one_way=True)

        # Verify
        assert decision.verdict.kind is VerdictKind.NO
        assert str(decision.cls_used) == "owcpw2"
        assert is_isomorphic(decision.verdict.witness, ladder.disjuncts[0])
        assert not decision.exact_for_width
        assert decision.m < decision.ell

    def test_decision_to_dict(self, ladder):
        data = decide_semantic_width(ladder, WidthClass.parse("pw", 2), 1, 2).to_dict()
        assert data["class"] == "cpw2"
        assert data["verdict"]["kind"] == "Yes"
        assert data["approximation_exhaustive"] is True
