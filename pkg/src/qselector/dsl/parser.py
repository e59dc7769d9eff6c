"""Tokenizer and recursive-descent parser for ``.qsp`` protocol files.

Grammar::

    program = [ header { stmt } ] ;
    header  = "qubits" INT ;
    stmt    = flux | bias | select | gate | measure | branch | prepare | assert ;
    flux    = "flux" REGION "=" expr ;
    bias    = "bias" "=" expr ;
    select  = "select" "expect" ( "quiet" | "either" ) ;
    gate    = "gate" ( "H" | "X" | "Z" | "S" ) INT ;
    measure = "measure" INT "in" ( "pm" | "comp" ) "->" IDENT ;
    branch  = "if" IDENT "==" OUTCOME "then" stmt ;
    prepare = "prepare" INT ( "|0>" | "|1>" | "|+>" | "|->" ) ;
    assert  = "assert_state" STRING "tol" NUMBER ;
    expr    = term { ( "+" | "-" ) term } ;
    term    = unary { ( "*" | "/" ) unary } ;
    unary   = "-" unary | NUMBER | IDENT | "(" expr ")" ;

``REGION`` is ``s`` followed by two digits, ``OUTCOME`` one of ``+ - 0 1``.
Line breaks are insignificant; ``#`` comments run to the end of the line and
attach to the next statement.  Every failure raises :class:`DSLSyntaxError`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .ast import (
    AssertStmt,
    BiasStmt,
    BinOp,
    BranchStmt,
    Const,
    FluxStmt,
    GateStmt,
    MeasureStmt,
    Neg,
    Num,
    PrepareStmt,
    ProtocolProgram,
    SelectStmt,
    SourceSpan,
)

__all__ = ["DSLSyntaxError", "Token", "tokenize", "parse", "parse_expression", "KEYWORDS"]

KEYWORDS = frozenset(
    {"qubits", "flux", "bias", "select", "expect", "gate", "measure", "in", "if", "then", "prepare", "assert_state", "tol"}
)
GATE_NAMES = ("H", "X", "Z", "S")
MAX_DEPTH = 100


class DSLSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int, expected=()):
        self.line = line
        self.column = column
        self.expected = tuple(expected)
        self.bare_message = message
        text = f"line {line}, column {column}: {message}"
        if self.expected:
            text += f" (expected {', '.join(self.expected)})"
        super().__init__(text)


@dataclass(frozen=True)
class Token:
    kind: str  # NUMBER, IDENT, REGION, KET, STRING, OP, COMMENT, EOF
    text: str
    span: SourceSpan


_OPS2 = ("==", "->")
_OPS1 = "=+-*/()"


def tokenize(text: str) -> list[Token]:
    tokens = []
    i, line, col, byte = 0, 1, 1, 0
    n = len(text)

    def span_from(start_i, start_line, start_col, start_byte):
        return SourceSpan(start_line, start_col, start_byte, byte)

    while i < n:
        ch = text[i]
        s_i, s_line, s_col, s_byte = i, line, col, byte

        def advance(k=1):
            nonlocal i, col, byte
            for c in text[i : i + k]:
                byte += len(c.encode("utf-8", "surrogatepass"))
            i += k
            col += k

        if ch == "\n":
            advance()
            line += 1
            col = 1
            continue
        if ch in " \t\r\f\v":
            advance()
            continue
        if ch == "#":
            j = text.find("\n", i)
            j = n if j < 0 else j
            advance(j - i)
            tokens.append(Token("COMMENT", text[s_i:i].rstrip(), span_from(s_i, s_line, s_col, s_byte)))
            continue
        if ch.isascii() and (ch.isalpha() or ch == "_"):
            j = i + 1
            while j < n and text[j].isascii() and (text[j].isalnum() or text[j] == "_"):
                j += 1
            advance(j - i)
            word = text[s_i:i]
            kind = "REGION" if len(word) == 3 and word[0] == "s" and word[1:].isdigit() else "IDENT"
            tokens.append(Token(kind, word, span_from(s_i, s_line, s_col, s_byte)))
            continue
        if ch.isascii() and (ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isascii() and text[i + 1].isdigit())):
            j = i
            while j < n and text[j].isascii() and text[j].isdigit():
                j += 1
            if j < n and text[j] == ".":
                j += 1
                while j < n and text[j].isascii() and text[j].isdigit():
                    j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isascii() and text[k].isdigit():
                    while k < n and text[k].isascii() and text[k].isdigit():
                        k += 1
                    j = k
                else:
                    raise DSLSyntaxError("malformed exponent", line, col + (k - i), ["digit"])
            if j < n and text[j].isascii() and (text[j].isalpha() or text[j] == "_"):
                raise DSLSyntaxError(f"unexpected character {text[j]!r} after number", line, col + (j - i))
            advance(j - i)
            tokens.append(Token("NUMBER", text[s_i:i], span_from(s_i, s_line, s_col, s_byte)))
            continue
        if ch == "|":
            if i + 2 < n and text[i + 1] in "01+-" and text[i + 2] == ">":
                advance(3)
                tokens.append(Token("KET", text[s_i:i], span_from(s_i, s_line, s_col, s_byte)))
                continue
            raise DSLSyntaxError("malformed ket", line, col, ["|0>", "|1>", "|+>", "|->"])
        if ch == '"':
            j = i + 1
            while j < n and text[j] not in '"\n':
                j += 1
            if j >= n or text[j] != '"':
                raise DSLSyntaxError("unterminated string", line, col, ['"'])
            advance(j + 1 - i)
            tokens.append(Token("STRING", text[s_i:i], span_from(s_i, s_line, s_col, s_byte)))
            continue
        if text.startswith(_OPS2, i):
            advance(2)
            tokens.append(Token("OP", text[s_i:i], span_from(s_i, s_line, s_col, s_byte)))
            continue
        if ch in _OPS1:
            advance()
            tokens.append(Token("OP", ch, span_from(s_i, s_line, s_col, s_byte)))
            continue
        raise DSLSyntaxError(f"unexpected character {ch!r}", line, col)
    tokens.append(Token("EOF", "", SourceSpan(line, col, byte, byte)))
    return tokens


def _number(tok: Token) -> float:
    value = float(tok.text)
    if not math.isfinite(value):
        raise DSLSyntaxError(f"number {tok.text} is out of range", tok.span.line, tok.span.column)
    return value


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.comments: list[str] = []
        self.tokens = tokens
        self.pos = 0
        self.depth = 0

    # token helpers; comments are skipped and buffered
    def _skip_comments(self):
        while self.tokens[self.pos].kind == "COMMENT":
            self.comments.append(self.tokens[self.pos].text)
            self.pos += 1

    def peek(self) -> Token:
        self._skip_comments()
        return self.tokens[self.pos]

    def take_comments(self) -> tuple:
        self._skip_comments()
        out, self.comments = tuple(self.comments), []
        return out

    def next(self) -> Token:
        tok = self.peek()
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def error(self, tok: Token, message: str, expected=()):
        found = "end of input" if tok.kind == "EOF" else repr(tok.text)
        raise DSLSyntaxError(f"{message}, found {found}", tok.span.line, tok.span.column, expected)

    def expect_word(self, *words) -> Token:
        tok = self.peek()
        if tok.kind == "IDENT" and tok.text in words:
            return self.next()
        self.error(tok, "unexpected token", [repr(w) for w in words])

    def expect_op(self, op) -> Token:
        tok = self.peek()
        if tok.kind == "OP" and tok.text == op:
            return self.next()
        self.error(tok, "unexpected token", [repr(op)])

    def expect_kind(self, kind, what) -> Token:
        tok = self.peek()
        if tok.kind == kind:
            return self.next()
        self.error(tok, "unexpected token", [what])

    def expect_int(self) -> Token:
        tok = self.peek()
        if tok.kind == "NUMBER" and tok.text.isdigit():
            if len(tok.text) > 9:
                raise DSLSyntaxError("integer too large", tok.span.line, tok.span.column)
            return self.next()
        self.error(tok, "unexpected token", ["integer"])

    # grammar
    def program(self) -> ProtocolProgram:
        header_comments = self.take_comments()
        first = self.peek()
        if first.kind == "EOF":
            return ProtocolProgram(None, (), header_comments, (), SourceSpan(1, 1, 0, first.span.end))
        kw = self.expect_word("qubits")
        n_tok = self.expect_int()
        header_span = kw.span.join(n_tok.span)
        statements = []
        while True:
            comments = self.take_comments()
            if self.peek().kind == "EOF":
                trailing = comments
                break
            statements.append(self.statement(comments))
        end = self.peek().span.end
        return ProtocolProgram(
            int(n_tok.text), tuple(statements), header_comments, trailing,
            SourceSpan(first.span.line, first.span.column, first.span.start, end), header_span,
        )

    def statement(self, comments=()):
        tok = self.peek()
        if tok.kind != "IDENT" or tok.text not in KEYWORDS - {"qubits", "expect", "in", "then", "tol"}:
            self.error(tok, "expected a statement",
                       ["'flux'", "'bias'", "'select'", "'gate'", "'measure'", "'if'", "'prepare'", "'assert_state'"])
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise DSLSyntaxError("statements nested too deeply", tok.span.line, tok.span.column)
        try:
            return getattr(self, "stmt_" + tok.text)(comments)
        finally:
            self.depth -= 1

    def stmt_flux(self, comments):
        kw = self.next()
        region = self.expect_kind("REGION", "region like s01")
        self.expect_op("=")
        expr = self.expr()
        return FluxStmt(region.text, expr, comments, kw.span.join(expr.span))

    def stmt_bias(self, comments):
        kw = self.next()
        self.expect_op("=")
        expr = self.expr()
        return BiasStmt(expr, comments, kw.span.join(expr.span))

    def stmt_select(self, comments):
        kw = self.next()
        self.expect_word("expect")
        mode = self.expect_word("quiet", "either")
        return SelectStmt(mode.text, comments, kw.span.join(mode.span))

    def stmt_gate(self, comments):
        kw = self.next()
        name = self.expect_word(*GATE_NAMES)
        q = self.expect_int()
        return GateStmt(name.text, int(q.text), comments, kw.span.join(q.span), q.span)

    def stmt_measure(self, comments):
        kw = self.next()
        q = self.expect_int()
        self.expect_word("in")
        basis = self.expect_word("pm", "comp")
        self.expect_op("->")
        name = self.peek()
        if name.kind != "IDENT" or name.text in KEYWORDS:
            self.error(name, "unexpected token", ["binding name"])
        self.next()
        return MeasureStmt(int(q.text), basis.text, name.text, comments, kw.span.join(name.span), q.span)

    def stmt_if(self, comments):
        kw = self.next()
        name = self.peek()
        if name.kind != "IDENT" or name.text in KEYWORDS:
            self.error(name, "unexpected token", ["binding name"])
        self.next()
        self.expect_op("==")
        out = self.peek()
        if (out.kind == "OP" and out.text in "+-") or (out.kind == "NUMBER" and out.text in ("0", "1")):
            self.next()
        else:
            self.error(out, "unexpected token", ["'+'", "'-'", "'0'", "'1'"])
        self.expect_word("then")
        body = self.statement()
        return BranchStmt(name.text, out.text, body, comments, kw.span.join(body.span))

    def stmt_prepare(self, comments):
        kw = self.next()
        q = self.expect_int()
        ket = self.expect_kind("KET", "ket like |0>")
        return PrepareStmt(int(q.text), ket.text[1], comments, kw.span.join(ket.span), q.span)

    def stmt_assert_state(self, comments):
        kw = self.next()
        ref = self.expect_kind("STRING", "quoted reference name")
        self.expect_word("tol")
        tol = self.expect_kind("NUMBER", "number")
        return AssertStmt(ref.text[1:-1], _number(tol), comments, kw.span.join(tol.span))

    def _enter(self, tok):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise DSLSyntaxError("expression nested too deeply", tok.span.line, tok.span.column)

    def _binary(self, ops, operand):
        # each chained operator deepens the (left-leaning) tree, so it counts
        # against the same limit as parentheses
        left = operand()
        entered = 0
        try:
            while True:
                tok = self.peek()
                if tok.kind != "OP" or tok.text not in ops:
                    return left
                self._enter(tok)
                entered += 1
                self.next()
                right = operand()
                left = BinOp(tok.text, left, right, left.span.join(right.span))
        finally:
            self.depth -= entered

    def expr(self):
        return self._binary(("+", "-"), self.term)

    def term(self):
        return self._binary(("*", "/"), self.unary)

    def unary(self):
        tok = self.peek()
        self._enter(tok)
        try:
            if tok.kind == "OP" and tok.text == "-":
                self.next()
                operand = self.unary()
                return Neg(operand, tok.span.join(operand.span))
            if tok.kind == "NUMBER":
                self.next()
                return Num(_number(tok), tok.span)
            if tok.kind == "IDENT" and tok.text not in KEYWORDS:
                self.next()
                return Const(tok.text, tok.span)
            if tok.kind == "OP" and tok.text == "(":
                self.next()
                inner = self.expr()
                close = self.expect_op(")")
                return _respan(inner, tok.span.join(close.span))
            self.error(tok, "expected an expression", ["number", "constant", "'('", "'-'"])
        finally:
            self.depth -= 1


def _respan(expr, span):
    # parentheses widen the span of the enclosed node
    return type(expr)(**{**expr.__dict__, "span": span})


def _decode(text) -> str:
    if isinstance(text, (bytes, bytearray)):
        try:
            return bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            prefix = bytes(text)[: exc.start].decode("utf-8")
            line = prefix.count("\n") + 1
            col = len(prefix) - (prefix.rfind("\n") + 1) + 1
            raise DSLSyntaxError("invalid UTF-8", line, col) from None
    return text


def parse(text) -> ProtocolProgram:
    """Parse a protocol source (``str`` or UTF-8 ``bytes``)."""
    return _Parser(tokenize(_decode(text))).program()


def parse_expression(text) -> object:
    """Parse a standalone expression (used by device config files)."""
    p = _Parser(tokenize(_decode(text)))
    expr = p.expr()
    tail = p.peek()
    if tail.kind != "EOF":
        p.error(tail, "trailing input after expression", ["end of input"])
    return expr
