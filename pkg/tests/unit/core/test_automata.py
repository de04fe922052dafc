import pytest

from semwidth.core.automata import (
    Letter,
    Nfa,
    concatenate,
    inverse_language,
    invert_word,
    is_simple_language,
    parse_regex,
    regular_path_pairs,
    to_regex,
    word_to_text,
)
from semwidth.core.graphdb import GraphDb, expand_inverses
from semwidth.errors import RegexSyntaxError, UnknownStateError


def w(text: str) -> tuple[Letter, ...]:
    return tuple(Letter.parse(part) for part in text.split(".")) if text else ()


class TestParseRegex:
    def test_concatenation_needs_an_operator(self):
        # Setup
        dotted = parse_regex("a.b")
        spaced = parse_regex("a b")
        joined = parse_regex("ab")

        # Verify
        assert dotted.accepts(w("a.b"))
        assert spaced.accepts(w("a.b"))
        assert joined.single_letter == Letter("ab")
        assert not joined.accepts(w("a.b"))

    def test_operators(self):
        nfa = parse_regex("a.(b.b)+|c*")
        assert nfa.accepts(w("a.b.b"))
        assert nfa.accepts(w("a.b.b.b.b"))
        assert not nfa.accepts(w("a.b"))
        assert nfa.accepts(())
        assert nfa.accepts(w("c.c.c"))

    def test_inverse_of_a_group(self):
        nfa = parse_regex("(a.b)^-")
        assert nfa.accepts(w("b^-.a^-"))
        assert not nfa.accepts(w("a^-.b^-"))
        assert nfa.uses_inverse

    def test_double_inverse_cancels(self):
        assert parse_regex("(a^-)^-").language_token == parse_regex("a").language_token

    def test_epsilon(self):
        nfa = parse_regex("<eps>")
        assert nfa.accepts(())
        assert nfa.max_word_length() == 0

    @pytest.mark.parametrize("text", ["a.b.(b.b)*", "a*|b", "a|a.b"])
    def test_one_final_state_besides_the_initial_one(self, text):
        nfa = parse_regex(text)
        assert len(nfa.final - nfa.initial) == 1
        assert nfa.sublanguage(0, next(iter(nfa.final - nfa.initial))).accepts(w("a.b")) == (text != "a*|b")

    def test_source_is_kept(self):
        assert parse_regex("  a.b* ").source == "a.b*"

    @pytest.mark.parametrize("text", ["", "a|", "(a", "a.)", "*a"])
    def test_syntax_errors(self, text):
        with pytest.raises(RegexSyntaxError):
            parse_regex(text)

    def test_unknown_operator_position(self):
        # Execute
        with pytest.raises(RegexSyntaxError) as exc_info:
            parse_regex("a&b")

        # Verify
        assert exc_info.value.position == 1
        assert "position 1" in str(exc_info.value)


class TestLanguages:
    def test_words_shortest_first(self):
        words = list(parse_regex("a*").words(3))
        assert words == [(), w("a"), w("a.a"), w("a.a.a")]

    def test_words_lexicographic_within_a_length(self):
        words = list(parse_regex("(a|b).(a|b)").words(2))
        assert words == [w("a.a"), w("a.b"), w("b.a"), w("b.b")]

    def test_max_word_length(self):
        assert parse_regex("a.b|a").max_word_length() == 2
        assert parse_regex("a.b*").max_word_length() is None
        assert parse_regex("a|b").max_word_length() == 1

    def test_single_letter(self):
        assert parse_regex("a").single_letter == Letter("a")
        assert parse_regex("a^-").single_letter == Letter("a", True)
        assert parse_regex("a|b").single_letter is None
        assert parse_regex("a.a").single_letter is None
        assert parse_regex("a|a.a").single_letter is None

    def test_language_token_identifies_equal_languages(self):
        assert parse_regex("a.(b.a)*").language_token == parse_regex("(a.b)*.a").language_token
        assert parse_regex("a|b").language_token == parse_regex("b|a").language_token
        assert parse_regex("a").language_token != parse_regex("a^-").language_token

    @pytest.mark.parametrize(
        "left, right",
        [("a.a.a.a.a", "a.a.a.a.a.a"), ("a.a.a.a.a.b*", "a.a.a.a.a.a.b*"), ("(a.a)*", "(a.a.a)*"), ("a*", "a+")],
    )
    def test_language_token_separates_languages_agreeing_on_short_words(self, left, right):
        # Setup
        five, six = parse_regex(left), parse_regex(right)

        # Verify
        assert five.language_token != six.language_token
        assert not (five.includes(six) and six.includes(five))

    def test_language_token_of_the_empty_language(self):
        dead = Nfa.build([(0, "a", 1)], initial=[0], final=[])
        assert dead.language_token == "<empty>"
        assert dead.language_token != parse_regex("<eps>").language_token

    def test_includes(self):
        assert parse_regex("a*").includes(parse_regex("a.a.a.a.a.a"))
        assert not parse_regex("a.a.a.a.a").includes(parse_regex("a.a.a.a.a.a"))
        assert parse_regex("(a|b)*").includes(parse_regex("a.(b.a)*"))
        assert not parse_regex("a.(b.a)*").includes(parse_regex("(a|b)*"))
        assert parse_regex("a").includes(Nfa.build([(0, "a", 1)], initial=[0], final=[]))

    def test_language_digest_is_short(self):
        assert len(parse_regex("a.b*").language_digest) == 12

    def test_language_token_ignores_dead_transitions(self):
        padded = Nfa.build([(0, "a", 1), (0, "b", 2)], initial=[0], final=[1])
        assert padded.language_token == parse_regex("a").language_token

    def test_inverse_language(self):
        nfa = parse_regex("a.b*")
        assert nfa.inverse.accepts(w("b^-.b^-.a^-"))
        assert not nfa.inverse.accepts(w("a.b"))
        assert invert_word(w("a.b^-")) == w("b.a^-")

    def test_inverse_language_swaps_ends(self):
        nfa = parse_regex("a.b*")
        inverse = inverse_language(nfa)
        assert inverse.source == "(a.b*)^-"
        assert inverse.initial == nfa.final
        assert inverse.language_token == parse_regex("b^-*.a^-").language_token
        assert inverse_language(inverse).language_token == nfa.language_token

    def test_word_to_text(self):
        assert word_to_text(w("a.b^-")) == "a.b^-"
        assert word_to_text(()) == "<eps>"

    def test_empty_language(self):
        nfa = Nfa.build([(0, "a", 1)], initial=[0], final=[2], states=[2])
        assert nfa.is_empty()
        assert list(nfa.words(3)) == []


class TestSublanguages:
    @pytest.fixture
    def nfa(self) -> Nfa:
        return Nfa.build([(0, "a", 1), (1, "b", 1), (1, "c", 2)], initial=[0], final=[2])

    def test_sublanguage_between_states(self, nfa):
        loop = nfa.sublanguage(1, 1)
        assert loop.accepts(())
        assert loop.accepts(w("b.b"))
        assert not loop.accepts(w("c"))

    def test_whole_language_is_itself(self, nfa):
        assert nfa.sublanguage(0, 2) is nfa

    def test_sublanguage_is_cached(self, nfa):
        assert nfa.sublanguage(0, 1) is nfa.sublanguage(0, 1)

    def test_letters_between(self, nfa):
        assert nfa.letters_between(1, 1) == (Letter("b"),)
        assert nfa.letters_between(0, 2) == ()

    def test_unknown_state(self, nfa):
        with pytest.raises(UnknownStateError):
            nfa.sublanguage(0, 7)
        with pytest.raises(UnknownStateError):
            nfa.letters_between(9, 0)


class TestConstructions:
    def test_concatenate(self):
        nfa = concatenate(parse_regex("a"), parse_regex("b*"), parse_regex("c^-"))
        assert nfa.accepts(w("a.c^-"))
        assert nfa.accepts(w("a.b.b.c^-"))
        assert not nfa.accepts(w("b.c^-"))
        assert nfa.source == "(a).(b*).(c^-)"

    def test_to_regex_uses_source(self):
        assert to_regex(parse_regex("a.(b|c)*")) == "a.(b|c)*"

    def test_to_regex_by_state_elimination(self):
        # Setup
        nfa = Nfa.build([(0, "a", 1), (1, "b", 1), (1, "c", 2), (0, "d", 2)], initial=[0], final=[2])

        # Execute
        regex = to_regex(nfa)

        # Verify
        assert parse_regex(regex).language_token == nfa.language_token

    def test_to_regex_of_empty_language(self):
        nfa = Nfa.build([(0, "a", 1)], initial=[0], final=[2], states=[2])
        with pytest.raises(ValueError):
            to_regex(nfa)


class TestSimpleLanguages:
    @pytest.mark.parametrize("text", ["a*", "a|b|c", "a"])
    def test_simple(self, text):
        assert is_simple_language(parse_regex(text))

    @pytest.mark.parametrize("text", ["a.b", "a+", "(a|b)*", "a^-", "a.a*", "a*|b"])
    def test_not_simple(self, text):
        assert not is_simple_language(parse_regex(text))


class TestRegularPathPairs:
    @pytest.fixture
    def chain(self) -> GraphDb:
        return GraphDb.of([("n0", "a", "n1"), ("n1", "a", "n2"), ("n2", "b", "n0")])

    def test_plus(self, chain):
        assert regular_path_pairs(parse_regex("a+"), chain) == {("n0", "n1"), ("n0", "n2"), ("n1", "n2")}

    def test_star_is_reflexive(self, chain):
        pairs = regular_path_pairs(parse_regex("a*"), chain)
        assert {("n0", "n0"), ("n1", "n1"), ("n2", "n2")} <= pairs

    def test_inverse_needs_expanded_database(self, chain):
        expanded = expand_inverses(chain)
        assert regular_path_pairs(parse_regex("a^-"), expanded) == {("n1", "n0"), ("n2", "n1")}
        assert regular_path_pairs(parse_regex("a.a^-"), expanded) == {("n0", "n0"), ("n1", "n1")}
