import sys
import time

import pytest

from profilink.anchors import AnchorRecord, build_dictionary
from profilink.fusion import Retriever, train_fusion
from profilink.index import build_index
from profilink.kb import Entity
from profilink.profile import ChainGenerator, FrequencyGenerator, OracleGenerator
from profilink.synth import make_benchmark, make_world

FOOTBALL = "Q1000001"  # fixture id for the UCLA football team
HOCKEY = "Q194121"
BASKETBALL = "Q3615392"

GENERATED_TITLE = "UCLA Bruins men's football"
GENERATED_DESC = "college football team of the University of California, Los Angeles"


@pytest.fixture
def bruins():
    return [
        Entity(HOCKEY, "Boston Bruins", ["Bruins"],
               "ice hockey team of the National Hockey League based in Boston, Massachusetts", "ice hockey team"),
        Entity(BASKETBALL, "UCLA Bruins men's basketball", ["Bruins"],
               "men's basketball team of the University of California, Los Angeles", "college basketball team"),
        Entity(FOOTBALL, "UCLA Bruins football", ["Bruins", "UCLA Bruins"],
               "college football team of the University of California, Los Angeles", "American football team"),
    ]


@pytest.fixture
def bruins_index(bruins):
    return build_index(bruins)


@pytest.fixture
def baltimore():
    """City is the popular reading of "Baltimore"; the baseball team is the gold."""
    kb = [
        Entity("Q5092", "Baltimore", ["Baltimore City"], "city in Maryland, United States", "city"),
        Entity("Q461595", "Baltimore Orioles", ["Baltimore", "Orioles"],
               "baseball team based in Baltimore, Maryland", "baseball team"),
        Entity("Q1018437", "Baltimore Ravens", ["Ravens"], "American football team based in Baltimore", "football team"),
    ]
    anchors = [AnchorRecord("Baltimore", "Q5092")] * 80 + [AnchorRecord("Baltimore", "Q461595")] * 15 + [
        AnchorRecord("Baltimore", "Q1018437")
    ] * 5
    return kb, build_dictionary(anchors)


class Bench:
    """Synthetic benchmark with a converged model, shared across tests."""

    def __init__(self, n_entities=2000, n_train=200, n_test=200, seed=0, nil_share=0.0, unanchored_share=None):
        self.world = make_world(n_entities, seed=seed)
        self.bench = make_benchmark(self.world, n_train + n_test, seed=seed + 1,
                                    nil_share=nil_share, unanchored_share=unanchored_share)
        self.index = build_index(self.bench.kb_entities)
        self.dictionary = build_dictionary(self.world.anchors)
        self.kb = {e.id: e for e in self.bench.kb_entities}
        self.generator = ChainGenerator(OracleGenerator(self.bench.profiles), FrequencyGenerator(self.dictionary, self.kb))
        self.retriever = Retriever(self.index, self.dictionary, self.generator)
        self.train = self.bench.mentions[:n_train]
        self.test = self.bench.mentions[n_train:]
        self.history = []
        self.model = train_fusion(self.retriever, self.train, history=self.history)


@pytest.fixture(scope="session")
def bench():
    return Bench()


def run_pipeline(directory, cli, n_entities=800, n_mentions=240, n_train=120, seed=3, nil_share=0.1):
    """Write a synthetic corpus and run the on-disk pipeline up to a trained model."""
    from profilink.synth import write_corpus

    world = make_world(n_entities, seed=seed)
    bench = make_benchmark(world, n_mentions, seed=seed + 1, nil_share=nil_share)
    write_corpus(bench, directory, n_train)
    c = ["--config", str(directory / "config.toml")]
    steps = [
        ["ingest", *c, "--out", str(directory / "kb.jsonl"), "--report", str(directory / "ingest.json")],
        ["index", *c, "--out", str(directory / "index.json")],
        ["build-dict", *c, "--out", str(directory / "dict.json")],
        ["train-fusion", *c, "--mentions", str(directory / "train.jsonl"), "--out", str(directory / "model.json"),
         "--n-rounds", "40"],
    ]
    codes = [cli(s) for s in steps]
    return bench, codes


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    from profilink.cli import main

    d = tmp_path_factory.mktemp("corpus")
    bench, codes = run_pipeline(d, main)
    assert codes == [0, 0, 0, 0]
    return d


def pytest_sessionstart(session):
    session.config._profilink_t0 = time.perf_counter()


@pytest.hookimpl(tryfirst=True)
def pytest_sessionfinish(session, exitstatus):
    acc = sys.modules.get("test_acceptance")
    if acc is None or 10 not in acc.RESULTS:
        return
    elapsed = time.perf_counter() - session.config._profilink_t0
    entry = acc.RESULTS[10]
    entry[2] = f"{entry[2]}; suite {elapsed:.1f}s".lstrip("; ")
    if elapsed >= acc.SUITE_BUDGET_S and entry[1] == "PASS":
        entry[1] = "FAIL"
        session.exitstatus = 1


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    acc = sys.modules.get("test_acceptance")
    if acc is None or not acc.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(acc.RESULTS):
        title, verdict, detail = acc.RESULTS[n]
        terminalreporter.write_line(f"[{verdict}] {n:>2}. {title}" + (f" ({detail})" if detail else ""))
