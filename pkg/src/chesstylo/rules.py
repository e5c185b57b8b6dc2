"""Minimal chess rules engine: board state, legal move generation, SAN/UCI.

Used for PGN replay validation, move encoding snapshots, and synthetic
game generation. Square indexing is a1=0 .. h8=63 (index = file + 8*rank).
Piece codes: 0 empty, 1-6 white P,N,B,R,Q,K, 7-12 black P,N,B,R,Q,K.
"""

from __future__ import annotations

import re

EMPTY = 0
WP, WN, WB, WR, WQ, WK = 1, 2, 3, 4, 5, 6
BP, BN, BB, BR, BQ, BK = 7, 8, 9, 10, 11, 12

PIECE_CHARS = ".PNBRQKpnbrqk"
PIECE_LETTERS = {WN: "N", WB: "B", WR: "R", WQ: "Q", WK: "K"}

# castling-rights bits
CASTLE_WK, CASTLE_WQ, CASTLE_BK, CASTLE_BQ = 1, 2, 4, 8

START_FEN = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1"

_KNIGHT_DELTAS = ((1, 2), (2, 1), (2, -1), (1, -2), (-1, -2), (-2, -1), (-2, 1), (-1, 2))
_KING_DELTAS = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))
_BISHOP_DIRS = ((1, 1), (-1, 1), (-1, -1), (1, -1))
_ROOK_DIRS = ((1, 0), (0, 1), (-1, 0), (0, -1))


def _build_tables():
    knight, king, bishop_rays, rook_rays = [], [], [], []
    for sq in range(64):
        f, r = sq & 7, sq >> 3
        knight.append(tuple((f + df) + 8 * (r + dr)
                            for df, dr in _KNIGHT_DELTAS
                            if 0 <= f + df < 8 and 0 <= r + dr < 8))
        king.append(tuple((f + df) + 8 * (r + dr)
                          for df, dr in _KING_DELTAS
                          if 0 <= f + df < 8 and 0 <= r + dr < 8))
        brs, rrs = [], []
        for dirs, out in ((_BISHOP_DIRS, brs), (_ROOK_DIRS, rrs)):
            for df, dr in dirs:
                ray = []
                nf, nr = f + df, r + dr
                while 0 <= nf < 8 and 0 <= nr < 8:
                    ray.append(nf + 8 * nr)
                    nf += df
                    nr += dr
                if ray:
                    out.append(tuple(ray))
        bishop_rays.append(tuple(brs))
        rook_rays.append(tuple(rrs))
    return tuple(knight), tuple(king), tuple(bishop_rays), tuple(rook_rays)


KNIGHT_MOVES, KING_MOVES, BISHOP_RAYS, ROOK_RAYS = _build_tables()


def square_name(sq: int) -> str:
    return "abcdefgh"[sq & 7] + str((sq >> 3) + 1)


def parse_square(name: str) -> int:
    return "abcdefgh".index(name[0]) + 8 * (int(name[1]) - 1)


class Move:
    """A move as from/to squares plus optional promotion piece type (2-5)."""

    __slots__ = ("frm", "to", "promo")

    def __init__(self, frm: int, to: int, promo: int = 0):
        self.frm = frm
        self.to = to
        self.promo = promo

    def uci(self) -> str:
        s = square_name(self.frm) + square_name(self.to)
        if self.promo:
            s += "nbrq"[self.promo - 2]
        return s

    @classmethod
    def from_uci(cls, uci: str) -> "Move":
        if not 4 <= len(uci) <= 5:
            raise ValueError(f"bad UCI move: {uci!r}")
        promo = 0
        if len(uci) == 5:
            promo = 2 + "nbrq".index(uci[4])
        return cls(parse_square(uci[:2]), parse_square(uci[2:4]), promo)

    def __eq__(self, other):
        return (isinstance(other, Move) and self.frm == other.frm
                and self.to == other.to and self.promo == other.promo)

    def __hash__(self):
        return self.frm | (self.to << 6) | (self.promo << 12)

    def __repr__(self):
        return f"Move({self.uci()!r})"


class IllegalMoveError(ValueError):
    pass


class Board:
    """Mutable position with make/undo. Replays full games and generates moves."""

    __slots__ = ("board", "white_to_move", "castling", "ep_square",
                 "halfmove_clock", "fullmove_number", "king_sq", "_stack")

    def __init__(self, fen: str = START_FEN):
        self.set_fen(fen)

    def set_fen(self, fen: str) -> None:
        parts = fen.split()
        if len(parts) < 4:
            raise ValueError(f"bad FEN: {fen!r}")
        board = [EMPTY] * 64
        rank = 7
        file = 0
        for ch in parts[0]:
            if ch == "/":
                rank -= 1
                file = 0
            elif ch.isdigit():
                file += int(ch)
            else:
                board[file + 8 * rank] = PIECE_CHARS.index(ch)
                file += 1
        self.board = board
        self.white_to_move = parts[1] == "w"
        self.castling = 0
        for ch, bit in (("K", CASTLE_WK), ("Q", CASTLE_WQ), ("k", CASTLE_BK), ("q", CASTLE_BQ)):
            if ch in parts[2]:
                self.castling |= bit
        self.ep_square = -1 if parts[3] == "-" else parse_square(parts[3])
        self.halfmove_clock = int(parts[4]) if len(parts) > 4 else 0
        self.fullmove_number = int(parts[5]) if len(parts) > 5 else 1
        self.king_sq = [board.index(WK), board.index(BK)]
        self._stack = []

    def fen(self) -> str:
        rows = []
        for rank in range(7, -1, -1):
            row = ""
            empty = 0
            for file in range(8):
                p = self.board[file + 8 * rank]
                if p == EMPTY:
                    empty += 1
                else:
                    if empty:
                        row += str(empty)
                        empty = 0
                    row += PIECE_CHARS[p]
            if empty:
                row += str(empty)
            rows.append(row)
        castle = "".join(ch for ch, bit in (("K", CASTLE_WK), ("Q", CASTLE_WQ),
                                            ("k", CASTLE_BK), ("q", CASTLE_BQ))
                         if self.castling & bit) or "-"
        ep = square_name(self.ep_square) if self.ep_square >= 0 else "-"
        return " ".join(["/".join(rows), "w" if self.white_to_move else "b",
                         castle, ep, str(self.halfmove_clock), str(self.fullmove_number)])

    def copy(self) -> "Board":
        b = Board.__new__(Board)
        b.board = self.board[:]
        b.white_to_move = self.white_to_move
        b.castling = self.castling
        b.ep_square = self.ep_square
        b.halfmove_clock = self.halfmove_clock
        b.fullmove_number = self.fullmove_number
        b.king_sq = self.king_sq[:]
        b._stack = []
        return b

    # ---- attack detection ----

    def is_attacked(self, sq: int, by_white: bool) -> bool:
        board = self.board
        if by_white:
            pawn, knight, bishop, rook, queen, king = WP, WN, WB, WR, WQ, WK
            f, r = sq & 7, sq >> 3
            if r > 0:
                if f > 0 and board[sq - 9] == pawn:
                    return True
                if f < 7 and board[sq - 7] == pawn:
                    return True
        else:
            pawn, knight, bishop, rook, queen, king = BP, BN, BB, BR, BQ, BK
            f, r = sq & 7, sq >> 3
            if r < 7:
                if f > 0 and board[sq + 7] == pawn:
                    return True
                if f < 7 and board[sq + 9] == pawn:
                    return True
        for t in KNIGHT_MOVES[sq]:
            if board[t] == knight:
                return True
        for t in KING_MOVES[sq]:
            if board[t] == king:
                return True
        for ray in BISHOP_RAYS[sq]:
            for t in ray:
                p = board[t]
                if p != EMPTY:
                    if p == bishop or p == queen:
                        return True
                    break
        for ray in ROOK_RAYS[sq]:
            for t in ray:
                p = board[t]
                if p != EMPTY:
                    if p == rook or p == queen:
                        return True
                    break
        return False

    def in_check(self) -> bool:
        side = 0 if self.white_to_move else 1
        return self.is_attacked(self.king_sq[side], not self.white_to_move)

    # ---- move generation ----

    def pseudo_legal_moves(self):
        board = self.board
        white = self.white_to_move
        moves = []
        add = moves.append
        if white:
            own_lo, own_hi = WP, WK
        else:
            own_lo, own_hi = BP, BK
        for sq in range(64):
            p = board[sq]
            if p < own_lo or p > own_hi:
                continue
            kind = p if white else p - 6
            f, r = sq & 7, sq >> 3
            if kind == WP:
                if white:
                    fwd, start_rank, promo_rank = 8, 1, 6
                else:
                    fwd, start_rank, promo_rank = -8, 6, 1
                t = sq + fwd
                if board[t] == EMPTY:
                    if r == promo_rank:
                        for pr in (WQ, WR, WB, WN):
                            add(Move(sq, t, pr))
                    else:
                        add(Move(sq, t))
                        if r == start_rank and board[sq + 2 * fwd] == EMPTY:
                            add(Move(sq, sq + 2 * fwd))
                for df in (-1, 1):
                    if not 0 <= f + df < 8:
                        continue
                    t = sq + fwd + df
                    cap = board[t]
                    enemy = (BP <= cap <= BK) if white else (WP <= cap <= WK)
                    if enemy:
                        if r == promo_rank:
                            for pr in (WQ, WR, WB, WN):
                                add(Move(sq, t, pr))
                        else:
                            add(Move(sq, t))
                    elif t == self.ep_square:
                        add(Move(sq, t))
            elif kind == WN:
                for t in KNIGHT_MOVES[sq]:
                    cap = board[t]
                    if cap == EMPTY or not (own_lo <= cap <= own_hi):
                        add(Move(sq, t))
            elif kind == WK:
                for t in KING_MOVES[sq]:
                    cap = board[t]
                    if cap == EMPTY or not (own_lo <= cap <= own_hi):
                        add(Move(sq, t))
            else:
                rays = ()
                if kind in (WB, WQ):
                    rays = BISHOP_RAYS[sq]
                for ray in rays:
                    for t in ray:
                        cap = board[t]
                        if cap == EMPTY:
                            add(Move(sq, t))
                        else:
                            if not (own_lo <= cap <= own_hi):
                                add(Move(sq, t))
                            break
                rays = ()
                if kind in (WR, WQ):
                    rays = ROOK_RAYS[sq]
                for ray in rays:
                    for t in ray:
                        cap = board[t]
                        if cap == EMPTY:
                            add(Move(sq, t))
                        else:
                            if not (own_lo <= cap <= own_hi):
                                add(Move(sq, t))
                            break
        self._add_castling(moves)
        return moves

    def _add_castling(self, moves) -> None:
        board = self.board
        if self.white_to_move:
            if self.in_check():
                return
            if (self.castling & CASTLE_WK and board[5] == EMPTY and board[6] == EMPTY
                    and not self.is_attacked(5, False) and not self.is_attacked(6, False)):
                moves.append(Move(4, 6))
            if (self.castling & CASTLE_WQ and board[3] == EMPTY and board[2] == EMPTY
                    and board[1] == EMPTY
                    and not self.is_attacked(3, False) and not self.is_attacked(2, False)):
                moves.append(Move(4, 2))
        else:
            if self.in_check():
                return
            if (self.castling & CASTLE_BK and board[61] == EMPTY and board[62] == EMPTY
                    and not self.is_attacked(61, True) and not self.is_attacked(62, True)):
                moves.append(Move(60, 62))
            if (self.castling & CASTLE_BQ and board[59] == EMPTY and board[58] == EMPTY
                    and board[57] == EMPTY
                    and not self.is_attacked(59, True) and not self.is_attacked(58, True)):
                moves.append(Move(60, 58))

    def legal_moves(self):
        moves = []
        mover_white = self.white_to_move
        side = 0 if mover_white else 1
        for mv in self.pseudo_legal_moves():
            self.push(mv)
            if not self.is_attacked(self.king_sq[side], not mover_white):
                moves.append(mv)
            self.pop()
        return moves

    def is_legal(self, mv: Move) -> bool:
        return mv in self.legal_moves()

    # ---- make / undo ----

    def push(self, mv: Move) -> None:
        board = self.board
        piece = board[mv.frm]
        captured = board[mv.to]
        captured_sq = mv.to
        white = self.white_to_move
        kind = piece if white else piece - 6
        if kind == WP and mv.to == self.ep_square and captured == EMPTY:
            captured_sq = mv.to - 8 if white else mv.to + 8
            captured = board[captured_sq]
            board[captured_sq] = EMPTY
        self._stack.append((mv, piece, captured, captured_sq, self.castling,
                            self.ep_square, self.halfmove_clock))
        board[mv.frm] = EMPTY
        board[mv.to] = piece if not mv.promo else (mv.promo if white else mv.promo + 6)
        new_ep = -1
        if kind == WP:
            self.halfmove_clock = 0
            if abs(mv.to - mv.frm) == 16:
                new_ep = (mv.frm + mv.to) // 2
        elif captured != EMPTY:
            self.halfmove_clock = 0
        else:
            self.halfmove_clock += 1
        if kind == WK:
            self.king_sq[0 if white else 1] = mv.to
            if white:
                self.castling &= ~(CASTLE_WK | CASTLE_WQ)
                if mv.frm == 4 and mv.to == 6:
                    board[5], board[7] = WR, EMPTY
                elif mv.frm == 4 and mv.to == 2:
                    board[3], board[0] = WR, EMPTY
            else:
                self.castling &= ~(CASTLE_BK | CASTLE_BQ)
                if mv.frm == 60 and mv.to == 62:
                    board[61], board[63] = BR, EMPTY
                elif mv.frm == 60 and mv.to == 58:
                    board[59], board[56] = BR, EMPTY
        for sq in (mv.frm, mv.to):
            if sq == 0:
                self.castling &= ~CASTLE_WQ
            elif sq == 7:
                self.castling &= ~CASTLE_WK
            elif sq == 56:
                self.castling &= ~CASTLE_BQ
            elif sq == 63:
                self.castling &= ~CASTLE_BK
            elif sq == 4:
                self.castling &= ~(CASTLE_WK | CASTLE_WQ)
            elif sq == 60:
                self.castling &= ~(CASTLE_BK | CASTLE_BQ)
        self.ep_square = new_ep
        if not white:
            self.fullmove_number += 1
        self.white_to_move = not white

    def pop(self) -> Move:
        mv, piece, captured, captured_sq, castling, ep_square, halfmove = self._stack.pop()
        board = self.board
        white = not self.white_to_move  # side that made the move
        board[mv.frm] = piece
        board[mv.to] = EMPTY
        if captured != EMPTY:
            board[captured_sq] = captured
        kind = piece if white else piece - 6
        if kind == WK:
            self.king_sq[0 if white else 1] = mv.frm
            if mv.frm in (4, 60) and abs(mv.to - mv.frm) == 2:
                if mv.to == 6:
                    board[7], board[5] = WR, EMPTY
                elif mv.to == 2:
                    board[0], board[3] = WR, EMPTY
                elif mv.to == 62:
                    board[63], board[61] = BR, EMPTY
                elif mv.to == 58:
                    board[56], board[59] = BR, EMPTY
        self.castling = castling
        self.ep_square = ep_square
        self.halfmove_clock = halfmove
        if not white:
            self.fullmove_number -= 1
        self.white_to_move = white
        return mv

    # ---- game status ----

    def is_checkmate(self) -> bool:
        return self.in_check() and not self.legal_moves()

    def is_stalemate(self) -> bool:
        return not self.in_check() and not self.legal_moves()

    def has_insufficient_material(self) -> bool:
        minors = 0
        for p in self.board:
            if p in (WP, WR, WQ, BP, BR, BQ):
                return False
            if p in (WN, WB, BN, BB):
                minors += 1
        return minors <= 1

    def position_key(self) -> tuple:
        return (bytes(self.board), self.white_to_move, self.castling, self._relevant_ep())

    def _relevant_ep(self) -> int:
        if self.ep_square < 0:
            return -1
        pawn = WP if self.white_to_move else BP
        delta = -8 if self.white_to_move else 8
        f = self.ep_square & 7
        for df in (-1, 1):
            if 0 <= f + df < 8 and self.board[self.ep_square + delta + df] == pawn:
                return self.ep_square
        return -1

    # ---- SAN ----

    def san(self, mv: Move) -> str:
        piece = self.board[mv.frm]
        kind = piece if piece <= 6 else piece - 6
        if kind == WK and abs(mv.to - mv.frm) == 2:
            s = "O-O" if mv.to > mv.frm else "O-O-O"
        else:
            capture = self.board[mv.to] != EMPTY or (kind == WP and mv.to == self.ep_square)
            if kind == WP:
                s = square_name(mv.frm)[0] if capture else ""
            else:
                s = PIECE_LETTERS[kind]
                others = [m for m in self.legal_moves()
                          if m.to == mv.to and m.frm != mv.frm
                          and self.board[m.frm] == piece]
                if others:
                    same_file = any((m.frm & 7) == (mv.frm & 7) for m in others)
                    same_rank = any((m.frm >> 3) == (mv.frm >> 3) for m in others)
                    if not same_file:
                        s += square_name(mv.frm)[0]
                    elif not same_rank:
                        s += square_name(mv.frm)[1]
                    else:
                        s += square_name(mv.frm)
            if capture:
                s += "x"
            s += square_name(mv.to)
            if mv.promo:
                s += "=" + "NBRQ"[mv.promo - 2]
        self.push(mv)
        if self.in_check():
            s += "#" if self.is_checkmate() else "+"
        self.pop()
        return s

    _SAN_RE = re.compile(
        r"^(?:(?P<castle>O-O(?:-O)?)|"
        r"(?P<piece>[KQRBN])?(?P<file>[a-h])?(?P<rank>[1-8])?(?P<cap>x)?"
        r"(?P<to>[a-h][1-8])(?:=?(?P<promo>[QRBN]))?)[+#]?$")

    def parse_san(self, san: str) -> Move:
        san = san.strip().rstrip("!?").replace("0-0-0", "O-O-O").replace("0-0", "O-O")
        m = self._SAN_RE.match(san)
        if not m:
            raise IllegalMoveError(f"unparseable SAN: {san!r}")
        legal = self.legal_moves()
        if m.group("castle"):
            king_from = 4 if self.white_to_move else 60
            king_to = king_from + (2 if m.group("castle") == "O-O" else -2)
            for mv in legal:
                if mv.frm == king_from and mv.to == king_to and \
                        self.board[mv.frm] in (WK, BK):
                    return mv
            raise IllegalMoveError(f"illegal castling: {san!r}")
        to = parse_square(m.group("to"))
        piece_letter = m.group("piece")
        want_kind = {"K": WK, "Q": WQ, "R": WR, "B": WB, "N": WN}.get(piece_letter, WP)
        promo = 0
        if m.group("promo"):
            promo = 2 + "NBRQ".index(m.group("promo"))
        candidates = []
        for mv in legal:
            if mv.to != to or mv.promo != promo:
                continue
            p = self.board[mv.frm]
            kind = p if p <= 6 else p - 6
            if kind != want_kind:
                continue
            if m.group("file") and square_name(mv.frm)[0] != m.group("file"):
                continue
            if m.group("rank") and square_name(mv.frm)[1] != m.group("rank"):
                continue
            candidates.append(mv)
        if len(candidates) != 1:
            raise IllegalMoveError(
                f"SAN {san!r} matches {len(candidates)} legal moves in {self.fen()!r}")
        return candidates[0]

    def push_san(self, san: str) -> Move:
        mv = self.parse_san(san)
        self.push(mv)
        return mv

    def push_uci(self, uci: str) -> Move:
        mv = Move.from_uci(uci)
        if not self.is_legal(mv):
            raise IllegalMoveError(f"illegal move {uci!r} in {self.fen()!r}")
        self.push(mv)
        return mv

    def perft(self, depth: int) -> int:
        if depth == 0:
            return 1
        total = 0
        for mv in self.legal_moves():
            self.push(mv)
            total += self.perft(depth - 1)
            self.pop()
        return total
