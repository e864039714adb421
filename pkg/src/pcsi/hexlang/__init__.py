"""Hex: Awk with DOM built-ins, run once over a parsed HTML page.

>>> prog = compile_hex(b'BEGIN { print root() }')
>>> execute(prog, parse_html(b"")).stdout
b'1\\n'
"""

from __future__ import annotations

import sys
import threading
import time
from dataclasses import dataclass, field
from typing import Optional, Union

from ..htmldom import DomTree, parse_html
from ..sexpr import Digest, hash_canonical
from .dates import seconds
from .interp import (
    Analysis,
    ExitProgram,
    HexRuntimeError,
    Interp,
    Limits,
    ResourceLimit,
    analyze,
)
from .lexer import HexSyntaxError
from .parser import ProgramAST, parse
from .values import HexTypeError

__all__ = [
    "HexProgram", "ExecOutcome", "Limits", "HexSyntaxError", "HexRuntimeError",
    "compile_hex", "execute", "run", "seconds", "script_hash",
]

# each Hex call level costs a few dozen Python frames
_FRAMES_PER_CALL = 40
_THREAD_STACK = 512 * 1024 * 1024
_stack_lock = threading.Lock()


def script_hash(source: bytes) -> Digest:
    """Identity of a script: the hash of its exact bytes as one atom."""
    return hash_canonical(bytes(source))


@dataclass(frozen=True)
class HexProgram:
    source: bytes
    ast: ProgramAST = field(repr=False, compare=False)
    analysis: Analysis = field(repr=False, compare=False)

    @property
    def functions(self) -> list:
        return list(self.ast.functions)

    @property
    def script_hash(self) -> Digest:
        return script_hash(self.source)


@dataclass
class ExecOutcome:
    stdout: bytes
    exit_status: int
    error: Optional[str] = None
    cpu_time: float = 0.0
    output_bytes: int = 0
    steps: int = 0
    diagnostics: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.error is None and self.exit_status == 0


def compile_hex(src: Union[bytes, str]) -> HexProgram:
    """Parse and check a script.  Raises HexSyntaxError on any static error."""
    if isinstance(src, str):
        src = src.encode("utf-8")
    src = bytes(src)
    ast = parse(src.decode("latin-1"))
    analysis = analyze(ast)
    # building closures once surfaces undefined functions, arity and regex errors
    Interp(ast, analysis, None, Limits())
    return HexProgram(src, ast, analysis)


def _run(program: HexProgram, tree: Optional[DomTree], limits: Limits) -> ExecOutcome:
    start = time.thread_time()
    status = 0
    error = None
    interp = None
    try:
        interp = Interp(program.ast, program.analysis, tree, limits)
        interp.main()
    except ExitProgram as e:
        status = e.status
    except ResourceLimit as e:
        status, error = 2, str(e)
    except (HexRuntimeError, HexTypeError) as e:
        status, error = 2, f"runtime error: {e}"
    except RecursionError:
        status, error = 2, "resource limit: recursion depth"
    except MemoryError:
        status, error = 2, "resource limit: memory"
    text = "".join(interp.out) if interp is not None else ""
    out = text.encode("latin-1")
    return ExecOutcome(
        stdout=out,
        exit_status=status,
        error=error,
        cpu_time=time.thread_time() - start,
        output_bytes=len(out),
        steps=interp.steps[0] if interp is not None else 0,
        diagnostics=list(interp.diagnostics) if interp is not None else [],
    )


def execute(program: HexProgram, tree: Optional[DomTree] = None, limits: Limits = Limits()) -> ExecOutcome:
    """Run the BEGIN blocks of ``program`` against ``tree``.

    Execution happens on a dedicated thread with a large stack so that deeply
    recursive scripts (one call per DOM node is typical) reach the configured
    depth limit rather than the interpreter's.
    """
    if tree is None:
        tree = parse_html(b"")
    needed = limits.max_depth * _FRAMES_PER_CALL + 1000
    if sys.getrecursionlimit() < needed:
        sys.setrecursionlimit(needed)
    result: list = []

    def target():
        result.append(_run(program, tree, limits))

    with _stack_lock:
        old = threading.stack_size(_THREAD_STACK)
        try:
            worker = threading.Thread(target=target, name="hex-exec", daemon=True)
            worker.start()
        finally:
            threading.stack_size(old)
    worker.join()
    return result[0]


def run(src: Union[bytes, str], html: bytes = b"", limits: Limits = Limits()) -> ExecOutcome:
    """Compile and execute in one step."""
    return execute(compile_hex(src), parse_html(html), limits)
