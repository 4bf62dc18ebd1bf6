import pytest

from chowcard.relation import Attribute, Relation, Schema


def hair_relation(counts: dict) -> Relation:
    """Rows (hair, nationality) with ``counts[(nationality, hair)]`` copies each."""
    schema = Schema("people", (Attribute("nationality", "text"), Attribute("hair", "text")))
    rows = [(nat, hair) for (nat, hair), c in sorted(counts.items()) for _ in range(c)]
    return Relation.from_rows(schema, rows)


# 10 Americans and 10 Swedes, uncompressed hair colour by nationality
TWO_NATIONS_COUNTS = {
    ("American", "Blond"): 2, ("American", "Brown"): 6, ("American", "Dark"): 2,
    ("Swedish", "Blond"): 8, ("Swedish", "Brown"): 2,
}

# five nationalities, five hair colours; with k=2, j=1 British, Dutch and French
# fall into one nationality bucket
FIVE_NATIONS_COUNTS = {
    ("American", "Blond"): 2, ("American", "Brown"): 5, ("American", "Dark"): 1,
    ("American", "Hazel"): 1, ("American", "Red"): 1,
    ("British", "Blond"): 2, ("British", "Brown"): 1, ("British", "Dark"): 1,
    ("Dutch", "Blond"): 1, ("Dutch", "Brown"): 1, ("Dutch", "Hazel"): 1,
    ("French", "Blond"): 1, ("French", "Brown"): 1, ("French", "Red"): 1,
    ("Swedish", "Blond"): 8, ("Swedish", "Brown"): 2,
}


@pytest.fixture
def two_nations_people():
    return hair_relation(TWO_NATIONS_COUNTS)


@pytest.fixture
def five_nations_people():
    return hair_relation(FIVE_NATIONS_COUNTS)


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
