"""Conversational fact learning: extraction, QA, and cross-verification.

Facts are (head, relation, tail) triples. Heads and tails are normalized
token sequences; the relation is an identifier kept verbatim. User-sourced
facts start in an unverified buffer and become trustworthy only after
``required_yes`` distinct non-source users confirm them; ``required_no``
rejections retire them. Questions the agent cannot answer are queued and
offered to *other* users later; property questions raised by new "isa"
facts go through the same queue (system-originated, so anyone may answer).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .commands import PatternElement, Var
from .matching import align_pattern
from .text import Token

UNVERIFIED = "unverified"
VERIFIED = "verified"
REJECTED = "rejected"

OPEN = "open"
ANSWERED = "answered"
EXPIRED = "expired"

HOLE = "?"


class VerificationError(ValueError):
    pass


class DuplicateVerifier(VerificationError):
    pass


class SelfVerification(VerificationError):
    pass


class AlreadyFinal(VerificationError):
    pass


class QuestionError(ValueError):
    pass


class QuestionClosed(QuestionError):
    pass


class SelfAnswer(QuestionError):
    pass


class UnparseableQuestion(ValueError):
    pass


@dataclass
class FactTriple:
    id: int
    head: tuple[Token, ...]
    relation: str
    tail: tuple[Token, ...]
    status: str = UNVERIFIED
    yes_voters: tuple[str, ...] = ()
    no_voters: tuple[str, ...] = ()
    source_kind: str = "seeded"  # "extracted" | "answered" | "seeded"
    source_user: str | None = None

    def as_tuple(self) -> tuple[tuple[Token, ...], str, tuple[Token, ...]]:
        return (self.head, self.relation, self.tail)

    def text(self) -> str:
        return f"{' '.join(self.head)} {relation_display(self.relation)} {' '.join(self.tail)}"


@dataclass(frozen=True)
class ExtractionRule:
    pattern: tuple[PatternElement, ...]
    head: str
    relation: str
    tail: str

    def __post_init__(self):
        bound = {el.name for el in self.pattern if isinstance(el, Var)}
        for part in (self.head, self.tail):
            if part.startswith("$") and part[1:] not in bound:
                raise ValueError(f"template variable {part} not bound by pattern")


@dataclass(frozen=True)
class QuestionRule:
    """Maps a question pattern to a triple with exactly one hole."""

    pattern: tuple[PatternElement, ...]
    head: str
    relation: str
    tail: str

    def __post_init__(self):
        holes = (self.head == HOLE) + (self.tail == HOLE)
        if holes != 1:
            raise ValueError("question template needs exactly one hole")
        bound = {el.name for el in self.pattern if isinstance(el, Var)}
        for part in (self.head, self.tail):
            if part.startswith("$") and part[1:] not in bound:
                raise ValueError(f"template variable {part} not bound by pattern")


@dataclass
class DeferredQuestion:
    id: int
    question_tokens: tuple[Token, ...]
    head: tuple[Token, ...] | None
    relation: str
    tail: tuple[Token, ...] | None
    origin_user: str | None  # None: system-originated (property questions)
    status: str = OPEN
    offers: int = 0
    answered_by: str | None = None

    def ask_text(self) -> str:
        return f"Hey, do you happen to know: {' '.join(self.question_tokens)}?"


@dataclass
class ExtractionHit:
    rule: ExtractionRule
    span: tuple[int, int]
    bindings: dict[str, tuple[Token, ...]]
    fact: FactTriple


@dataclass
class QueryOutcome:
    answer_text: str | None
    fact: FactTriple | None
    deferred_id: int | None


@dataclass
class SideQuestion:
    kind: str  # "verify" | "deferred"
    question: str
    fact_id: int | None = None
    deferred_id: int | None = None


def relation_display(relation: str) -> str:
    if relation == "isa":
        return "is a"
    return relation.replace("_", " ")


def _subspan_match(
    tokens: tuple[Token, ...], pattern: tuple[PatternElement, ...]
) -> tuple[tuple[int, int], dict[str, tuple[Token, ...]]] | None:
    """Leftmost contiguous span the pattern covers at zero edit cost."""
    min_len = len(pattern)  # every element consumes at least one token
    for start in range(0, len(tokens) - min_len + 1):
        for end in range(start + min_len, len(tokens) + 1):
            alignment = align_pattern(tokens[start:end], pattern)
            if alignment.edit_cost == 0 and alignment.feasible:
                bindings = {
                    name: value for name, value in alignment.bindings.items()
                }
                return (start, end), bindings
    return None


def _full_match(
    tokens: tuple[Token, ...], pattern: tuple[PatternElement, ...]
) -> dict[str, tuple[Token, ...]] | None:
    """Zero-cost alignment over the whole utterance (questions are anchored,
    so a trailing variable absorbs everything up to the end)."""
    if len(tokens) < len(pattern):
        return None
    alignment = align_pattern(tokens, pattern)
    if alignment.edit_cost == 0 and alignment.feasible:
        return dict(alignment.bindings)
    return None


@dataclass
class KnowledgeBase:
    extraction_rules: tuple[ExtractionRule, ...] = ()
    question_rules: tuple[QuestionRule, ...] = ()
    properties: dict[str, tuple[str, ...]] = field(default_factory=dict)
    required_yes: int = 3
    required_no: int = 2
    offer_limit: int = 5
    facts: list[FactTriple] = field(default_factory=list)
    questions: list[DeferredQuestion] = field(default_factory=list)
    _next_fact_id: int = 1
    _next_question_id: int = 1

    # -- facts ------------------------------------------------------------

    def find_fact(self, head, relation, tail) -> FactTriple | None:
        for fact in self.facts:
            if fact.as_tuple() == (tuple(head), relation, tuple(tail)):
                return fact
        return None

    def add_fact(
        self,
        head: tuple[Token, ...],
        relation: str,
        tail: tuple[Token, ...],
        source_kind: str,
        source_user: str | None,
        verified: bool = False,
    ) -> FactTriple:
        """New unverified fact (developer seeds may enter pre-verified)."""
        existing = self.find_fact(head, relation, tail)
        if existing is not None:
            return existing
        fact = FactTriple(
            id=self._next_fact_id,
            head=tuple(head),
            relation=relation,
            tail=tuple(tail),
            status=VERIFIED if verified else UNVERIFIED,
            source_kind=source_kind,
            source_user=source_user,
        )
        self._next_fact_id += 1
        self.facts.append(fact)
        return fact

    def restore_fact(self, fact: FactTriple) -> None:
        if any(f.id == fact.id for f in self.facts):
            raise ValueError(f"duplicate fact id {fact.id}")
        self.facts.append(fact)
        self._next_fact_id = max(self._next_fact_id, fact.id + 1)

    def fact(self, fact_id: int) -> FactTriple:
        for f in self.facts:
            if f.id == fact_id:
                return f
        raise KeyError(fact_id)

    # -- extraction --------------------------------------------------------

    def extract_facts(
        self,
        tokens: list[Token],
        user_id: str,
        recent_isa: dict[tuple[Token, ...], tuple[Token, ...]],
    ) -> list[ExtractionHit]:
        """Fire every zero-cost rule once (leftmost span) and buffer new facts.

        ``recent_isa`` is the session's coreference memory (isa tail -> most
        recent head); it is consulted for ``@last_isa:<type>`` template parts
        and updated as isa facts are produced, so later rules in the same
        utterance can reference earlier ones.
        """
        hits: list[ExtractionHit] = []
        toks = tuple(tokens)
        for rule in self.extraction_rules:
            match = _subspan_match(toks, rule.pattern)
            if match is None:
                continue
            span, bindings = match
            triple = self._fill_template(rule, bindings, recent_isa)
            if triple is None:
                continue
            head, relation, tail = triple
            if self.find_fact(head, relation, tail) is not None:
                continue
            fact = self.add_fact(head, relation, tail, "extracted", user_id)
            hits.append(ExtractionHit(rule, span, bindings, fact))
            if relation == "isa":
                recent_isa[tail] = head
        return hits

    def _fill_template(self, rule: ExtractionRule, bindings, recent_isa):
        def resolve(part: str) -> tuple[Token, ...] | None:
            if part.startswith("$"):
                return bindings.get(part[1:])
            if part.startswith("@last_isa:"):
                return recent_isa.get(tuple(part.split(":", 1)[1].split()))
            return tuple(part.split())

        head = resolve(rule.head)
        tail = resolve(rule.tail)
        if head is None or tail is None:
            return None
        return head, rule.relation, tail

    # -- question answering --------------------------------------------------

    def answer_query(self, tokens: list[Token], user_id: str) -> QueryOutcome:
        """Answer from the KB, or queue the question for other users.

        Verified (and developer-seeded) facts answer plainly; unverified
        facts answer with an explicit "(unverified)" flag; rejected facts
        never answer. Raises UnparseableQuestion when no rule fires.
        """
        toks = tuple(tokens)
        parsed = None
        for rule in self.question_rules:
            bindings = _full_match(toks, rule.pattern)
            if bindings is not None:
                parsed = (rule, bindings)
                break
        if parsed is None:
            raise UnparseableQuestion(" ".join(tokens))
        rule, bindings = parsed

        def resolve(part: str) -> tuple[Token, ...] | None:
            if part == HOLE:
                return None
            if part.startswith("$"):
                return bindings.get(part[1:], ())
            return tuple(part.split())

        head = resolve(rule.head)
        tail = resolve(rule.tail)

        best: FactTriple | None = None
        for fact in self.facts:
            if fact.status == REJECTED or fact.relation != rule.relation:
                continue
            if head is not None and fact.head != head:
                continue
            if tail is not None and fact.tail != tail:
                continue
            if best is None or _answer_rank(fact) < _answer_rank(best):
                best = fact
        if best is not None:
            value = best.tail if tail is None else best.head
            text = " ".join(value)
            if best.status == UNVERIFIED:
                text += " (unverified)"
            return QueryOutcome(text, best, None)

        question = self._enqueue_question(toks, head, rule.relation, tail, user_id)
        return QueryOutcome(None, None, question.id)

    def _enqueue_question(self, tokens, head, relation, tail, origin) -> DeferredQuestion:
        for q in self.questions:
            if q.status == OPEN and (q.head, q.relation, q.tail) == (head, relation, tail):
                return q
        question = DeferredQuestion(
            id=self._next_question_id,
            question_tokens=tuple(tokens),
            head=head,
            relation=relation,
            tail=tail,
            origin_user=origin,
        )
        self._next_question_id += 1
        self.questions.append(question)
        return question

    def restore_question(self, question: DeferredQuestion) -> None:
        if any(q.id == question.id for q in self.questions):
            raise ValueError(f"duplicate question id {question.id}")
        self.questions.append(question)
        self._next_question_id = max(self._next_question_id, question.id + 1)

    def question(self, question_id: int) -> DeferredQuestion:
        for q in self.questions:
            if q.id == question_id:
                return q
        raise KeyError(question_id)

    # -- property follow-ups ---------------------------------------------------

    def propose_property_question(self, fact: FactTriple) -> str | None:
        """For a new isa fact, queue a question about its first unknown property."""
        if fact.relation != "isa":
            return None
        for prop in self.properties.get(" ".join(fact.tail), ()):
            known = any(
                f.head == fact.head and f.relation == prop and f.status != REJECTED
                for f in self.facts
            )
            if known:
                continue
            head_text = " ".join(fact.head)
            text = f"What is the {relation_display(prop)} of {head_text}?"
            tokens = ("what", "is", "the", *prop.split("_"), "of", *fact.head)
            self._enqueue_question(tokens, fact.head, prop, None, origin=None)
            return text
        return None

    # -- cross-verification ---------------------------------------------------

    def verify_fact(self, fact_id: int, user_id: str, vote: str) -> FactTriple:
        fact = self.fact(fact_id)
        if fact.status != UNVERIFIED:
            raise AlreadyFinal(f"fact {fact_id} is {fact.status}")
        if user_id == fact.source_user:
            raise SelfVerification(user_id)
        if user_id in fact.yes_voters or user_id in fact.no_voters:
            raise DuplicateVerifier(user_id)
        if vote == "yes":
            fact.yes_voters = (*fact.yes_voters, user_id)
            if len(fact.yes_voters) >= self.required_yes:
                fact.status = VERIFIED
        elif vote == "no":
            fact.no_voters = (*fact.no_voters, user_id)
            if len(fact.no_voters) >= self.required_no:
                fact.status = REJECTED
        else:
            raise ValueError(f"vote must be yes or no, got {vote!r}")
        return fact

    # -- deferred answers --------------------------------------------------------

    def record_deferred_answer(
        self, question_id: int, answer: tuple[Token, ...], user_id: str
    ) -> FactTriple:
        question = self.question(question_id)
        if question.status != OPEN:
            raise QuestionClosed(f"question {question_id} is {question.status}")
        if question.origin_user is not None and user_id == question.origin_user:
            raise SelfAnswer(user_id)
        head = question.head if question.head is not None else tuple(answer)
        tail = question.tail if question.tail is not None else tuple(answer)
        fact = self.add_fact(head, question.relation, tail, "answered", user_id)
        question.status = ANSWERED
        question.answered_by = user_id
        return fact

    def decline_deferred(self, question_id: int) -> None:
        """The asked user did not know; expire after too many fruitless offers."""
        question = self.question(question_id)
        if question.status == OPEN and question.offers >= self.offer_limit:
            question.status = EXPIRED

    # -- side-question policy ------------------------------------------------------

    def next_side_question(self, user_id: str) -> SideQuestion | None:
        """Oldest verifiable fact first, then oldest askable open question."""
        for fact in self.facts:
            if fact.status != UNVERIFIED:
                continue
            if user_id == fact.source_user:
                continue
            if user_id in fact.yes_voters or user_id in fact.no_voters:
                continue
            return SideQuestion(
                kind="verify",
                question=f"Is it true that {fact.text()}?",
                fact_id=fact.id,
            )
        for question in self.questions:
            if question.status != OPEN:
                continue
            if question.offers >= self.offer_limit:
                question.status = EXPIRED
                continue
            if question.origin_user == user_id:
                continue
            question.offers += 1
            return SideQuestion(
                kind="deferred",
                question=question.ask_text(),
                deferred_id=question.id,
            )
        return None

    def counts(self) -> dict[str, int]:
        by_status = {UNVERIFIED: 0, VERIFIED: 0, REJECTED: 0}
        for fact in self.facts:
            by_status[fact.status] += 1
        return {
            "facts": len(self.facts),
            "verified": by_status[VERIFIED],
            "unverified": by_status[UNVERIFIED],
            "rejected": by_status[REJECTED],
            "open_questions": sum(1 for q in self.questions if q.status == OPEN),
        }


def _answer_rank(fact: FactTriple) -> tuple[int, int]:
    return (0 if fact.status == VERIFIED else 1, fact.id)
