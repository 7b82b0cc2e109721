import math
import xml.etree.ElementTree as ET
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quoteid.corpus import CharacterEntity, Corpus, Mention, Novel, QuotationRecord, Stance
from quoteid.errors import ConfigError, InputError, ResolutionError
from quoteid.network import build_network, export_network, load_network_json, smooth, to_dot, to_graphml

TEXT = "x" * 10


def mention(cid):
    return Mention("x", 0, 1, cid)


def corpus_from(triples, n_chars, stances=None):
    roster = tuple(CharacterEntity(f"c{i:02d}", f"Name{i}", stance=(stances or {}).get(i, Stance.UNKNOWN))
                   for i in range(n_chars))
    qs = tuple(
        QuotationRecord(f"q{k}", "n", Mention("x", 5, 6), mention(f"c{s:02d}"),
                        tuple(mention(f"c{a:02d}") for a in addr))
        for k, (s, addr) in enumerate(triples)
    )
    return Corpus({"n": Novel("n", "", "", TEXT, "en")}, roster, qs)


def test_single_quotation():
    net = build_network(corpus_from([(0, [1])], 2))
    assert [(n.character_id, n.quote_count) for n in net.nodes] == [("c00", 1), ("c01", 0)]
    [e] = net.edges
    assert (e.source, e.target, e.count) == ("c00", "c01", 1)


def test_top_k_twelve_characters():
    triples = [(i, [(i + 1) % 12]) for i in range(12) for _ in range(12 - i)]
    net = build_network(corpus_from(triples, 12), top_k=10)
    kept = {n.character_id for n in net.nodes}
    assert kept == {f"c{i:02d}" for i in range(10)}
    assert all(e.source in kept and e.target in kept for e in net.edges)
    assert len(net.edges) == 9  # c09->c10, c10->c11, c11->c00 dropped
    assert [n.quote_count for n in net.nodes] == sorted((n.quote_count for n in net.nodes), reverse=True)


def test_ties_broken_by_id():
    net = build_network(corpus_from([(2, [0]), (1, [0]), (0, [1])], 3), top_k=2)
    assert [n.character_id for n in net.nodes] == ["c00", "c01"]


def brute_force(triples, kept):
    pairs = Counter()
    for s, addr in triples:
        for a in dict.fromkeys(addr):
            if f"c{s:02d}" in kept and f"c{a:02d}" in kept:
                pairs[(f"c{s:02d}", f"c{a:02d}")] += 1
    return pairs


TRIPLES = st.integers(2, 50).flatmap(lambda n: st.tuples(
    st.just(n),
    st.lists(st.tuples(st.integers(0, n - 1), st.lists(st.integers(0, n - 1), min_size=1, max_size=3)),
             max_size=500),
    st.one_of(st.none(), st.integers(1, n)),
))


@settings(max_examples=60, deadline=None)
@given(TRIPLES)
def test_conservation(case):
    n, triples, top_k = case
    triples = [(s, [a for a in addr if a != s] or [(s + 1) % n]) for s, addr in triples]
    net = build_network(corpus_from(triples, n), top_k=top_k)
    kept = {x.character_id for x in net.nodes}
    assert {(e.source, e.target): e.count for e in net.edges} == dict(brute_force(triples, kept))
    spoken = Counter(f"c{s:02d}" for s, _ in triples)
    assert all(x.quote_count == spoken[x.character_id] for x in net.nodes)
    full = build_network(corpus_from(triples, n), top_k=None)
    assert {(e.source, e.target, e.count) for e in net.edges} <= {(e.source, e.target, e.count) for e in full.edges}
    if top_k is None:
        assert sum(e.count for e in net.edges) == sum(len(set(a)) for _, a in triples)
    rev = build_network(corpus_from([(a[0], [s]) for s, a in triples if len(a) == 1], n), top_k=None)
    fwd = build_network(corpus_from([(s, a) for s, a in triples if len(a) == 1], n), top_k=None)
    assert {(e.target, e.source, e.count) for e in fwd.edges} == {(e.source, e.target, e.count) for e in rev.edges}


def test_weights_and_sizes_monotone():
    triples = [(0, [1])] * 5 + [(1, [0])] * 2 + [(2, [0])]
    net = build_network(corpus_from(triples, 3))
    by_count = sorted(net.edges, key=lambda e: e.count)
    assert [e.weight for e in by_count] == sorted(e.weight for e in by_count)
    assert net.node("c00").size == pytest.approx(math.log1p(5))


def test_resolution_error():
    c = corpus_from([(0, [1])], 2)
    bad = c.with_quotations([QuotationRecord("q", "n", Mention("x", 5, 6), Mention("x", 0, 1), ())])
    with pytest.raises(ResolutionError) as info:
        build_network(bad)
    assert info.value.offenders == ["q:speaker:x"]


def test_smooth():
    assert smooth([0]) == [0.0]
    out = smooth([1, 10, 100])
    assert out[0] < out[1] < out[2]
    assert smooth([math.e - 1])[0] == pytest.approx(1.0)
    assert smooth([4], "sqrt") == [2.0] and smooth([3], "identity") == [3.0]
    with pytest.raises(InputError):
        smooth([-1])
    with pytest.raises(ConfigError):
        smooth([1], "cube")


def stance_net():
    return build_network(corpus_from([(0, [1]), (1, [0]), (2, [0])], 3,
                                     {0: Stance.PROTAGONIST, 1: Stance.VILLAIN}))


def test_stance_colors():
    net = stance_net()
    assert net.node("c00").color == "darksalmon"
    assert net.node("c01").color == "aquamarine"
    assert net.node("c02").color == "lightgray"


def test_dot_export(tmp_path):
    net = build_network(corpus_from([(0, [1])], 2))
    dot = to_dot(net)
    assert dot.count("->") == 1 and '"c00" -> "c01"' in dot
    assert 'weight="0.6931"' in dot
    export_network(net, "dot", tmp_path / "n.dot")
    assert (tmp_path / "n.dot").read_text("utf-8") == dot


def test_graphml_export(tmp_path):
    net = stance_net()
    path = export_network(net, "graphml", tmp_path / "n.graphml")
    root = ET.parse(path).getroot()
    ns = {"g": "http://graphml.graphdrawing.org/xmlns"}
    nodes = root.findall(".//g:node", ns)
    assert len(nodes) == 3 and len(root.findall(".//g:edge", ns)) == 3
    colors = {n.get("id"): n.find("g:data[@key='d4']", ns).text for n in nodes}
    assert colors["c00"] == "darksalmon" and colors["c01"] == "aquamarine"
    assert to_graphml(net) == to_graphml(stance_net())


def test_json_roundtrip(tmp_path):
    net = stance_net()
    export_network(net, "json", tmp_path / "n.json")
    assert load_network_json(tmp_path / "n.json") == net
    with pytest.raises(ConfigError):
        export_network(net, "png", tmp_path / "n.png")


def test_unwritable_path(tmp_path):
    with pytest.raises(OSError):
        export_network(stance_net(), "json", tmp_path / "missing" / "dir" / "n.json")


def test_fixture_corpus_leaders(zh):
    net = build_network(zh)
    assert {n.character_id for n in net.nodes[:2]} == {"guojing", "huangrong"}
    assert net.edge("guojing", "huangrong").count == 2
