import shutil
import subprocess
import time

import pytest
from hypothesis import given, settings, strategies as st

from pcsi.hexlang import HexSyntaxError, Limits, compile_hex, execute, run, script_hash, seconds
from pcsi.htmldom import parse_html
from pcsi.sexpr import hash_canonical

from conftest import ARTICLE_PREFIX, CORPUS

CORPUS_SCRIPTS = sorted(CORPUS.glob("*.awk"))
MAWK = shutil.which("mawk")


def test_corpus_is_large_enough():
    assert len(CORPUS_SCRIPTS) >= 30


@pytest.mark.parametrize("script", CORPUS_SCRIPTS, ids=lambda p: p.stem)
def test_corpus_matches_frozen_reference_output(script):
    outcome = run(script.read_bytes())
    assert outcome.error is None
    assert outcome.stdout == script.with_suffix(".out").read_bytes()
    assert outcome.exit_status == int(script.with_suffix(".status").read_text())


@pytest.mark.skipif(MAWK is None, reason="mawk not installed")
@pytest.mark.parametrize("script", CORPUS_SCRIPTS, ids=lambda p: p.stem)
def test_frozen_outputs_still_match_live_mawk(script):
    proc = subprocess.run([MAWK, "-f", str(script)], capture_output=True, stdin=subprocess.DEVNULL, timeout=30)
    assert proc.stdout == script.with_suffix(".out").read_bytes()
    assert proc.returncode == int(script.with_suffix(".status").read_text())


# -- DOM built-ins -------------------------------------------------------------

PAGE = b'<div id="a" class="k"><p>one</p><!-- c --><p lang="en">two</p></div>'


def hex_out(src: str, page: bytes = PAGE) -> str:
    outcome = run(src, page)
    assert outcome.error is None, outcome.error
    return outcome.stdout.decode("latin-1")


def test_navigation_builtins():
    out = hex_out(
        "BEGIN { r = root(); d = children(r); p1 = children(d); c = sister(p1); p2 = sister(c)\n"
        " print r, d, p1, c, p2, parent(p1), sister(p2), children(children(p1)), parent(r) }"
    )
    assert out == "1 2 3 5 6 2 0 0 0\n"


def test_inspection_builtins():
    out = hex_out(
        'BEGIN { print type(1), type(2), type(4), type(5), type(0) "|"\n'
        ' print name(2), name(4) "|" name(0) "|"\n'
        ' print text(4), text(3) "|" text(7)\n'
        ' print attr(2, "id"), attr(2, "class"), attr(6, "lang"), "[" attr(2, "nope") "]", "[" attr(4, "id") "]" }'
    )
    assert out == "ROOT ELEMENT TEXT COMMENT |\ndiv ||\none |two\na k en [] []\n"


def test_uninitialised_results_compare_as_empty_and_zero():
    out = hex_out('BEGIN { x = attr(2, "nope"); print (x == ""), (x == 0), length(x) }')
    assert out == "1 1 0\n"


def test_selmatch():
    out = hex_out(
        'BEGIN { print selmatch(3, "div > p"), selmatch(3, "#a p"), selmatch(6, "p[lang=en]"), '
        'selmatch(3, "p[lang]"), selmatch(0, "*"), selmatch(2, "div.k") }'
    )
    assert out == "1 1 1 0 0 1\n"


def test_selmatch_bad_selector_warns_and_returns_zero():
    outcome = run('BEGIN { print selmatch(3, "p:hover"); print selmatch(3, "p:hover") }', PAGE)
    assert outcome.stdout == b"0\n0\n"
    assert len(outcome.diagnostics) == 1 and "selmatch" in outcome.diagnostics[0]


def test_text_bytes_pass_through_unchanged():
    page = "<p>café – ✓</p>".encode("utf-8")
    outcome = run("BEGIN { t = text(children(children(root()))); print length(t), t }", page)
    text = "café – ✓".encode("utf-8")
    assert outcome.stdout == b"%d " % len(text) + text + b"\n"


def test_dom_names_are_reserved():
    with pytest.raises(HexSyntaxError):
        compile_hex("BEGIN { text = 1 }")
    with pytest.raises(HexSyntaxError):
        compile_hex("function root() { return 1 } BEGIN { }")


# -- seconds ------------------------------------------------------------------------

@pytest.mark.parametrize(
    "text, expected",
    [
        ("2024-12-13T17:52:22.647Z", "1734112342"),
        ("1970-01-01T00:00:00Z", "0"),
        ("not a date", ""),
        ("2024-12-13T18:52:22+01:00", "1734112342"),
        ("2024-12-13 17:52:22", "1734112342"),
        ("Fri, 13 Dec 2024 17:52:22 GMT", "1734112342"),
        ("2024-12-13", "1734048000"),
        ("December 13, 2024", "1734048000"),
        ("Dec 13 2024", "1734048000"),
        ("2024-02-30", ""),
        ("", ""),
    ],
)
def test_seconds(text, expected):
    assert seconds(text) == expected
    assert hex_out(f'BEGIN {{ print seconds("{text}") }}', b"") == expected + "\n"


# -- language rules ------------------------------------------------------------------

@pytest.mark.parametrize(
    "src",
    [
        "{ print }",
        "/x/ { print }",
        "END { print }",
        "BEGIN { getline x }",
        "BEGIN { next }",
        'BEGIN { print "x" > "file" }',
        'BEGIN { print "x" | "cat" }',
        'BEGIN { system("ls") }',
        "function length(x) { } BEGIN { }",
        "BEGIN { x = 1; x[1] = 2 }",
        "BEGIN { f() }",
        "function f(a) { } BEGIN { f(1, 2) }",
        "BEGIN { if (1) { }",
        "BEGIN { x = /(/ }",
    ],
)
def test_static_errors(src):
    with pytest.raises(HexSyntaxError):
        compile_hex(src)


def test_syntax_error_reports_position():
    with pytest.raises(HexSyntaxError) as info:
        compile_hex("BEGIN {\n  x = = 1\n}")
    assert info.value.line == 2


def test_uninitialised_argument_becomes_array_in_caller():
    out = hex_out("function fill(a) { a[1] = 7 } BEGIN { fill(arr); print arr[1], length(arr[1]) }", b"")
    assert out == "7 1\n"


def test_scalar_passed_as_array_is_rejected_statically():
    with pytest.raises(HexSyntaxError, match="both array and scalar"):
        compile_hex("function f(a) { a[1] = 1 } BEGIN { x = 1; f(x) }")


def test_fields_are_empty_without_input():
    assert hex_out('BEGIN { print "[" $0 "]", $1 + 0 }', b"") == "[] 0\n"


def test_division_by_zero_is_a_runtime_error():
    outcome = run("BEGIN { print 1 / 0 }")
    assert outcome.exit_status == 2 and "division" in outcome.error


def test_exit_stops_all_begin_blocks():
    assert run("BEGIN { print 1; exit } BEGIN { print 2 }").stdout == b"1\n"


# -- limits ----------------------------------------------------------------------------

def test_infinite_loop_stops_within_twice_the_cpu_budget():
    budget = 1.0
    start = time.process_time()
    outcome = run("BEGIN { while (1) x++ }", limits=Limits(cpu_seconds=budget, max_steps=10**15))
    used = time.process_time() - start
    assert outcome.error == "resource limit: cpu"
    assert outcome.exit_status == 2
    assert used < 2 * budget


def test_step_limit():
    outcome = run("BEGIN { for (;;) { } }", limits=Limits(max_steps=10_000))
    assert outcome.error == "resource limit: steps"


def test_output_limit_truncates_at_the_limit():
    outcome = run('BEGIN { while (1) print "0123456789" }', limits=Limits(max_output_bytes=1000))
    assert outcome.error == "resource limit: output"
    assert len(outcome.stdout) == 1000


def test_recursion_depth_limit():
    src = "function f(n) { if (n == 0) return 0; return 1 + f(n - 1) } BEGIN { print f(DEPTH) }"
    ok = run(src.replace("DEPTH", "9000"))
    assert ok.stdout == b"9000\n"
    deep = run(src.replace("DEPTH", "100000"))
    assert deep.error == "resource limit: recursion depth"
    small = run(src.replace("DEPTH", "50"), limits=Limits(max_depth=20))
    assert small.error == "resource limit: recursion depth"


# -- reference script -------------------------------------------------------------------

def test_reference_script_defines_its_helpers(bbc_script):
    program = compile_hex(bbc_script)
    assert set(program.functions) == {
        "object", "verbatim", "walk", "only", "between", "paragraph", "subheading",
        "hypertext", "hypertext1", "csexp", "image", "imageurl", "imagecaption", "error",
    }


def test_reference_script_output(bbc_script, bbc_page):
    outcome = execute(compile_hex(bbc_script), parse_html(bbc_page))
    assert outcome.ok
    assert outcome.stdout.startswith(ARTICLE_PREFIX)
    assert outcome.stdout.endswith(b")\n")
    assert b"(4:link80:https://www.apple.com/uk/newsroom/2024/12/apple-intelligence-is-available-today/)" in outcome.stdout
    assert b"(10:subheading22:'Embarrassing' mistake)" in outcome.stdout
    assert b"Related links" not in outcome.stdout


def test_reference_script_missing_headline(bbc_script, bbc_page_no_h1):
    outcome = run(bbc_script, bbc_page_no_h1)
    assert outcome.exit_status == 1
    assert outcome.stdout == b"error: missing headline\n"


def test_script_hash_is_hash_of_source_atom(bbc_script):
    assert script_hash(bbc_script) == hash_canonical(bbc_script)
    assert compile_hex(bbc_script).script_hash == script_hash(bbc_script)


@settings(max_examples=150, deadline=None)
@given(st.text(alphabet="abc \t:,", max_size=20), st.sampled_from([" ", ":", ",", "", "b+"]))
def test_split_then_join_rebuilds_non_whitespace_input(s, sep):
    if sep == " ":
        return
    src = (
        'BEGIN { n = split(S, parts, SEP); out = ""\n'
        ' for (i = 1; i <= n; i++) out = out (i > 1 ? J : "") parts[i]\n'
        " print n; print out }"
    )
    lit = lambda x: '"' + x.replace("\\", "\\\\").replace('"', '\\"').replace("\t", "\\t") + '"'
    joiner = sep if sep not in ("", "b+") else ""
    prog = src.replace("S,", lit(s) + ",").replace("SEP", lit(sep)).replace("J", lit(joiner))
    outcome = run(prog)
    n_line, joined = outcome.stdout.decode("latin-1").split("\n")[:2]
    if sep in (":", ","):
        assert int(n_line) == (s.count(sep) + 1 if s else 0)
        assert joined == s
    elif sep == "":
        assert int(n_line) == len(s) and joined == s
