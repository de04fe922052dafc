import itertools

import oracles
from oracle_suite import oracle_suite


class TestOraclesOnClosedForms:
    def test_bell_numbers(self):
        for n, expected in enumerate(oracles.BELL):
            items = [f"v{i}" for i in range(n)]
            assert len(oracles.brute_partitions(items)) == expected

    def test_clique_widths(self):
        for n in range(1, 6):
            vertices = [f"v{i}" for i in range(n)]
            edges = list(itertools.combinations(vertices, 2))
            assert oracles.elimination_width(vertices, edges) == n - 1
            assert oracles.separation_width(vertices, edges) == n - 1

    def test_path_and_cycle(self):
        path = [("a", "b"), ("b", "c"), ("c", "d")]
        cycle = path + [("d", "a")]
        assert oracles.elimination_width("abcd", path) == 1
        assert oracles.separation_width("abcd", path) == 1
        assert oracles.elimination_width("abcd", cycle) == 2

    def test_star_has_pathwidth_one(self):
        edges = [("c", leaf) for leaf in "wxyz"]
        assert oracles.separation_width("cwxyz", edges) == 1

    def test_regex_matcher(self):
        assert oracles.regex_matches("(a.a^-)*", ())
        assert oracles.regex_matches("(a.a^-)*", ("a", "a^-", "a", "a^-"))
        assert not oracles.regex_matches("(a.a^-)*", ("a",))
        assert oracles.regex_matches("(a.b)^-", ("b^-", "a^-"))
        assert oracles.regex_matches("a+|<eps>", ())
        assert not oracles.regex_matches("a+", ())

    def test_homomorphism_through_inverse(self):
        # Setup
        src = [("x", "a^-", "y")]
        dst = [("u", "a", "v")]

        # Execute
        maps = oracles.brute_homomorphisms(src, (), dst, ())

        # Verify
        assert maps == [{"x": "v", "y": "u"}]

    def test_bibliography_tables(self):
        assert ("author2", "author3") in oracles.bibliography_coauthors()
        chains = oracles.bibliography_chains()
        assert ("author1", "author3") in chains
        assert ("author1", "author4") not in chains
        assert ("paper1", "paper1") in chains


class TestOracleSuite:
    def test_clean_summary(self):
        # Execute
        summary = oracle_suite()

        # Verify
        assert summary.ok, str(summary)
        assert summary.comparisons["regex membership"].cases >= 50
        assert summary.comparisons["widths"].cases >= 100
