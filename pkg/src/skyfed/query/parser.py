"""Recursive-descent parser for the catalog query dialect.

Precedence, loosest first: OR < AND < NOT < comparison < additive <
multiplicative < unary minus. Parse errors carry the byte offset and the
expected-token set.
"""

from __future__ import annotations

from typing import Optional

from ..errors import ParseError
from .nodes import (
    Binary,
    ColumnRef,
    FuncCall,
    Literal,
    OrderItem,
    Query,
    SelectItem,
    TableSource,
    Unary,
    XMatchSource,
)
from .tokens import Token, TokenType, tokenize

_COMPARISONS = {
    TokenType.LT: "<",
    TokenType.LE: "<=",
    TokenType.EQ: "=",
    TokenType.NE: "!=",
    TokenType.GE: ">=",
    TokenType.GT: ">",
}


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    # -- token helpers -----------------------------------------------------

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        if t.type is not TokenType.EOF:
            self.pos += 1
        return t

    def check(self, ttype: TokenType) -> bool:
        return self.peek().type is ttype

    def accept(self, ttype: TokenType) -> Optional[Token]:
        if self.check(ttype):
            return self.advance()
        return None

    def expect(self, *types: TokenType) -> Token:
        t = self.peek()
        if t.type in types:
            return self.advance()
        expected = " or ".join(tt.value for tt in types)
        got = t.text or t.type.value
        raise ParseError(f"expected {expected}, got {got!r}", t.offset)

    # -- grammar -----------------------------------------------------------

    def query(self) -> Query:
        self.expect(TokenType.SELECT)
        select = [self.select_item()]
        while self.accept(TokenType.COMMA):
            select.append(self.select_item())
        self.expect(TokenType.FROM)
        source = self.source()
        where = None
        if self.accept(TokenType.WHERE):
            where = self.expr()
        group_by: list = []
        if self.accept(TokenType.GROUP):
            self.expect(TokenType.BY)
            group_by.append(self.expr())
            while self.accept(TokenType.COMMA):
                group_by.append(self.expr())
        order_by: list = []
        if self.accept(TokenType.ORDER):
            self.expect(TokenType.BY)
            order_by.append(self.order_item())
            while self.accept(TokenType.COMMA):
                order_by.append(self.order_item())
        limit = None
        if self.accept(TokenType.LIMIT):
            t = self.expect(TokenType.INT)
            limit = t.value
        self.expect(TokenType.EOF)
        return Query(
            select=tuple(select),
            source=source,
            where=where,
            group_by=tuple(group_by),
            order_by=tuple(order_by),
            limit=limit,
        )

    def select_item(self) -> SelectItem:
        if self.accept(TokenType.STAR):
            return SelectItem(expr=None, star=True)
        e = self.expr()
        alias = None
        if self.accept(TokenType.AS):
            alias = self.expect(TokenType.IDENT).text
        return SelectItem(expr=e, alias=alias)

    def source(self):
        if self.check(TokenType.XMATCH):
            t = self.advance()
            self.expect(TokenType.LPAREN)
            surveys = [self.expect(TokenType.IDENT).text]
            while self.accept(TokenType.COMMA):
                surveys.append(self.expect(TokenType.IDENT).text)
            self.expect(TokenType.RPAREN)
            k = max_radius = mode = None
            if self.accept(TokenType.WITH):
                while True:
                    name_tok = self.expect(TokenType.IDENT)
                    self.expect(TokenType.EQ)
                    name = name_tok.text.lower()
                    if name == "k":
                        k = self.number()
                    elif name == "max_radius":
                        max_radius = self.number()
                    elif name == "mode":
                        m = self.expect(TokenType.IDENT)
                        if m.text.lower() not in ("all", "best"):
                            raise ParseError(
                                f"mode must be all or best, got {m.text!r}", m.offset
                            )
                        mode = m.text.lower()
                    else:
                        raise ParseError(
                            f"unknown XMATCH option {name_tok.text!r} "
                            "(want k, max_radius or mode)",
                            name_tok.offset,
                        )
                    if not self.accept(TokenType.COMMA):
                        break
            return XMatchSource(
                surveys=tuple(surveys),
                k=k,
                max_radius_arcsec=max_radius,
                mode=mode,
                offset=t.offset,
            )
        t = self.expect(TokenType.IDENT)
        return TableSource(name=t.text, offset=t.offset)

    def number(self) -> float:
        neg = self.accept(TokenType.MINUS) is not None
        t = self.expect(TokenType.INT, TokenType.FLOAT)
        v = float(t.value)
        return -v if neg else v

    def order_item(self) -> OrderItem:
        e = self.expr()
        if self.accept(TokenType.DESC):
            return OrderItem(e, descending=True)
        self.accept(TokenType.ASC)
        return OrderItem(e, descending=False)

    def expr(self):
        return self.or_expr()

    def or_expr(self):
        e = self.and_expr()
        while True:
            t = self.accept(TokenType.OR)
            if not t:
                return e
            e = Binary("OR", e, self.and_expr(), offset=t.offset)

    def and_expr(self):
        e = self.not_expr()
        while True:
            t = self.accept(TokenType.AND)
            if not t:
                return e
            e = Binary("AND", e, self.not_expr(), offset=t.offset)

    def not_expr(self):
        t = self.accept(TokenType.NOT)
        if t:
            return Unary("NOT", self.not_expr(), offset=t.offset)
        return self.comparison()

    def comparison(self):
        e = self.additive()
        t = self.peek()
        if t.type in _COMPARISONS:
            self.advance()
            return Binary(_COMPARISONS[t.type], e, self.additive(), offset=t.offset)
        return e

    def additive(self):
        e = self.multiplicative()
        while True:
            t = self.peek()
            if t.type is TokenType.PLUS or t.type is TokenType.MINUS:
                self.advance()
                e = Binary(t.text, e, self.multiplicative(), offset=t.offset)
            else:
                return e

    def multiplicative(self):
        e = self.unary()
        while True:
            t = self.peek()
            if t.type is TokenType.STAR or t.type is TokenType.SLASH:
                self.advance()
                op = "*" if t.type is TokenType.STAR else "/"
                e = Binary(op, e, self.unary(), offset=t.offset)
            else:
                return e

    def unary(self):
        t = self.accept(TokenType.MINUS)
        if t:
            return Unary("-", self.unary(), offset=t.offset)
        return self.primary()

    def primary(self):
        t = self.peek()
        if t.type is TokenType.INT:
            self.advance()
            return Literal(t.value, "int", offset=t.offset)
        if t.type is TokenType.FLOAT:
            self.advance()
            return Literal(t.value, "float", offset=t.offset)
        if t.type is TokenType.STRING:
            self.advance()
            return Literal(t.value, "text", offset=t.offset)
        if t.type is TokenType.LPAREN:
            self.advance()
            e = self.expr()
            self.expect(TokenType.RPAREN)
            return e
        if t.type is TokenType.IDENT:
            self.advance()
            if self.check(TokenType.LPAREN):
                return self.func_call(t)
            if self.check(TokenType.DOT):
                self.advance()
                col = self.expect(TokenType.IDENT)
                return ColumnRef(name=col.text, survey=t.text, offset=t.offset)
            return ColumnRef(name=t.text, offset=t.offset)
        got = t.text or t.type.value
        raise ParseError(f"expected an expression, got {got!r}", t.offset)

    def func_call(self, name_tok: Token) -> FuncCall:
        self.expect(TokenType.LPAREN)
        name = name_tok.text.upper()
        if self.accept(TokenType.STAR):
            self.expect(TokenType.RPAREN)
            return FuncCall(name=name, args=(), star=True, offset=name_tok.offset)
        args: list = []
        if not self.check(TokenType.RPAREN):
            args.append(self.expr())
            while self.accept(TokenType.COMMA):
                args.append(self.expr())
        self.expect(TokenType.RPAREN)
        return FuncCall(name=name, args=tuple(args), offset=name_tok.offset)


def parse(text: str) -> Query:
    """Parse query text into an AST; raises ParseError/LexError with offsets."""
    return _Parser(tokenize(text)).query()
