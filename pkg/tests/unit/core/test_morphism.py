import oracles
import pytest

from semwidth.core.automata import parse_regex
from semwidth.core.morphism import (
    IsoIndex,
    cq_core,
    equal_languages,
    find_homomorphisms,
    has_homomorphism,
    homomorphic_images,
    is_isomorphic,
    is_strong_onto,
    quotient,
    representative,
    same_language,
    set_partitions,
    shape_key,
)
from semwidth.core.query_model import Atom, C2rpq
from semwidth.errors import ArityMismatchError, NotACQError


def cq(*atoms: tuple[str, str, str], output: tuple[str, ...] = (), name: str = "q") -> C2rpq:
    return C2rpq.of([Atom(s, parse_regex(r), d) for s, r, d in atoms], output, name=name)


@pytest.fixture
def triangle() -> C2rpq:
    return cq(("x", "a", "y"), ("y", "b", "z"), ("z", "c", "x"), output=("x",), name="triangle")


class TestHomomorphisms:
    def test_path_folds_onto_an_edge(self):
        path = cq(("x", "a", "y"), ("y", "a^-", "z"), output=("x",))
        edge = cq(("u", "a", "v"), output=("u",))
        maps = [h.mapping for h in find_homomorphisms(path, edge)]
        assert maps == [{"x": "u", "y": "v", "z": "u"}]

    def test_outputs_are_respected(self):
        src = cq(("x", "a", "y"), output=("x", "y"))
        dst = cq(("u", "a", "v"), ("v", "a", "w"), output=("v", "w"))
        assert [h.mapping for h in find_homomorphisms(src, dst)] == [{"x": "v", "y": "w"}]

    def test_clashing_outputs(self):
        src = cq(("x", "a", "x"), output=("x", "x"))
        dst = cq(("u", "a", "v"), ("v", "a", "v"), output=("u", "v"))
        assert not has_homomorphism(src, dst)

    def test_languages_must_match(self):
        src = cq(("x", "a*", "y"))
        assert has_homomorphism(src, cq(("u", "a*", "u")))
        assert not has_homomorphism(src, cq(("u", "a+", "u")))

    def test_arity_mismatch(self):
        with pytest.raises(ArityMismatchError):
            next(find_homomorphisms(cq(("x", "a", "y"), output=("x",)), cq(("x", "a", "y"))))

    def test_image_atoms(self, triangle):
        loop = cq(("w", "a", "w"), ("w", "b", "w"), ("w", "c", "w"), output=("w",))
        h = next(find_homomorphisms(triangle, loop))
        assert {(a.src, a.dst) for a in h.image_atoms()} == {("w", "w")}
        assert h("y") == "w"

    def test_matches_the_brute_force_search(self):
        src = cq(("x", "a", "y"), ("y", "b", "z"))
        dst = cq(("u", "a", "v"), ("v", "b", "u"), ("u", "b", "u"))
        found = sorted(tuple(sorted(h.mapping.items())) for h in find_homomorphisms(src, dst))
        expected = sorted(
            tuple(sorted(m.items()))
            for m in oracles.brute_homomorphisms(
                [("x", "a", "y"), ("y", "b", "z")], (), [("u", "a", "v"), ("v", "b", "u"), ("u", "b", "u")], ()
            )
        )
        assert found == expected

    def test_strong_onto(self, triangle):
        merged, mapping = quotient(triangle, [("x", "y"), ("z",)])
        assert is_strong_onto(mapping, triangle, merged)
        bigger = cq(("x", "a", "x"), ("x", "b", "z"), ("z", "c", "x"), ("z", "d", "z"), output=("x",))
        assert not is_strong_onto(mapping, triangle, bigger)


class TestLanguages:
    def test_same_language(self):
        assert same_language(parse_regex("a.b|a.c"), parse_regex("a.(b|c)"))
        assert not same_language(parse_regex("a"), parse_regex("a*"))
        assert not same_language(parse_regex("a.a.a.a.a"), parse_regex("a.a.a.a.a.a"))

    def test_equal_languages_by_inclusion(self):
        assert equal_languages(parse_regex("a.(b.a)*"), parse_regex("(a.b)*.a"))
        assert not equal_languages(parse_regex("a.a.a.a.a"), parse_regex("a.a.a.a.a.a"))

    def test_paths_of_different_lengths_do_not_map(self):
        # Setup
        five = cq(("x", "a.a.a.a.a", "y"), output=("x", "y"), name="five")
        six = cq(("x", "a.a.a.a.a.a", "y"), output=("x", "y"), name="six")

        # Verify
        assert not has_homomorphism(five, six)
        assert not has_homomorphism(six, five)
        assert not is_isomorphic(five, six)

    def test_parallel_atoms_with_different_lengths_stay_apart(self):
        both = cq(("x", "a.a.a.a.a", "y"), ("x", "a.a.a.a.a.a", "y"), output=("x", "y"))
        merged, _ = quotient(both, [("x",), ("y",)])
        assert len(merged.atoms) == 2

    def test_found_homomorphisms_preserve_languages(self):
        src = cq(("x", "a.(b.a)*", "y"), output=("x",))
        dst = cq(("u", "(a.b)*.a", "v"), ("w", "a^-", "v"), output=("u",))
        maps = list(find_homomorphisms(src, dst))
        assert maps
        assert all(h.preserves_languages() for h in maps)

    def test_index_keeps_paths_of_different_lengths(self):
        index = IsoIndex()
        assert index.add(cq(("x", "a.a.a.a.a", "y"), name="five"))
        assert index.add(cq(("x", "a.a.a.a.a.a", "y"), name="six"))
        assert len(index) == 2


class TestQuotients:
    def test_partition_counts_are_bell_numbers(self):
        for n in range(6):
            items = [f"v{i}" for i in range(n)]
            assert sum(1 for _ in set_partitions(items)) == oracles.BELL[n]

    def test_partitions_are_distinct(self):
        blocks = [frozenset(map(frozenset, p)) for p in set_partitions(["a", "b", "c", "d"])]
        assert len(set(blocks)) == len(blocks)

    def test_representative_prefers_user_variables(self):
        assert representative(["0#1", "y", "x"]) == "x"
        assert representative(["1#2", "0#1"]) == "0#1"

    def test_quotient_merges_parallel_atoms(self):
        q = cq(("x", "a", "y"), ("x", "a", "z"), output=("x",))
        merged, mapping = quotient(q, [("x",), ("y", "z")])
        assert len(merged.atoms) == 1
        assert mapping == {"x": "x", "y": "y", "z": "y"}

    def test_homomorphic_images_of_the_triangle(self, triangle):
        images = list(homomorphic_images(triangle))
        assert len(images) == 5
        assert triangle in images
        assert len(images[0].vars) == 1


class TestIsomorphism:
    def test_renamed_queries_are_isomorphic(self):
        a = cq(("x", "a", "y"), ("y", "b", "z"), output=("x",))
        b = cq(("u", "a", "w"), ("w", "b", "v"), output=("u",))
        assert is_isomorphic(a, b)
        assert shape_key(a) == shape_key(b)

    def test_outputs_break_symmetry(self):
        a = cq(("x", "a", "y"), output=("x",))
        b = cq(("x", "a", "y"), output=("y",))
        assert not is_isomorphic(a, b)

    def test_iso_index(self):
        # Setup
        index = IsoIndex()
        a = cq(("x", "a", "y"), ("y", "a", "x"))
        b = cq(("u", "a", "v"), ("v", "a", "u"))
        c = cq(("u", "a", "u"))

        # Execute
        added = [index.add(a), index.add(b), index.add(c)]

        # Verify
        assert added == [True, False, True]
        assert len(index) == 2
        assert index.find(b) is a


class TestCores:
    def test_redundant_atom_is_dropped(self):
        q = cq(("x", "a", "y"), ("x", "a", "z"), output=("x",))
        core = cq_core(q)
        assert len(core.atoms) == 1

    def test_outputs_keep_their_atoms(self):
        q = cq(("x", "a", "y"), ("x", "a", "z"), output=("x", "y", "z"))
        assert len(cq_core(q).atoms) == 2

    def test_path_onto_loop(self):
        q = cq(("x", "a", "y"), ("y", "a", "z"), ("z", "a", "z"))
        assert len(cq_core(q).atoms) == 1

    def test_needs_a_cq(self):
        with pytest.raises(NotACQError):
            cq_core(cq(("x", "a*", "y")))
