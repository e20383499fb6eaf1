"""The interactive command agent.

One utterance either asks the knowledge base a question, teaches it facts,
or requests an action. Action requests are scored against the seed-command
store: familiar commands execute straight away, commands near known ones
produce a short option list to choose from, and commands the agent cannot
place at all trigger a rephrase request. Whatever the user then confirms
(an option choice, a rephrase that grounds, or a demonstration) becomes
ground truth, and the agent learns a new seed command from it on the spot.

Risk policy: the agent never asks more than ``question_budget`` questions
for one task, never more than ``rephrase_attempts`` rephrases, shows an
option list only when at least two candidates clear a similarity floor,
and asks at most one knowledge side-question per session, only after a
successfully completed task.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .commands import (
    ApiAction,
    Lit,
    PatternElement,
    Provenance,
    SeedCommand,
    SlotType,
    Var,
    render_done_text,
    render_option_text,
    validate_pattern,
)
from .knowledge import KnowledgeBase, SideQuestion, UnparseableQuestion
from .matching import (
    Candidate,
    NoveltyBand,
    Thresholds,
    classify_novelty,
    novelty_report,
)
from .store import SeedCommandStore
from .text import Token, is_question, tokenize
from .world import WorldState

OPTIONS_PROMPT = "Sorry, I didn't get you. Do you mean to:"
REPHRASE_PROMPT = "Can you say it again in another way?"
GIVE_UP_TEXT = "Sorry, I still didn't get it. I'll stop asking for now."
ACK_FACT_TEXT = "Got it, thanks."
ACK_IRRELEVANT_TEXT = "Okay."
ANSWER_UNKNOWN_TEXT = "I don't know yet, but I'll try to find out."
ANSWER_UNPARSEABLE_TEXT = "Sorry, I don't know how to answer that."
EMPTY_INPUT_TEXT = "I didn't catch that."
THANKS_TEXT = "Thanks, noted!"
THANKS_ANYWAY_TEXT = "Okay, thanks anyway."

DECLINE_FORMS = frozenset({"i dont know", "dont know", "no idea", "idk", ""})


class PhaseError(RuntimeError):
    """Raised when an operation does not match the session phase."""


class IndexOutOfRange(ValueError):
    pass


class NotLearned(RuntimeError):
    pass


# -- replies -------------------------------------------------------------


@dataclass
class AskVerify:
    fact_ref: int
    question: str
    reply_type = "AskVerify"


@dataclass
class AskDeferred:
    question_ref: int
    question: str
    reply_type = "AskDeferred"


@dataclass
class ExecuteResult:
    text: str
    side: Union[AskVerify, AskDeferred, None] = None
    reply_type = "ExecuteResult"


@dataclass
class Options:
    prompt: str
    options: list[str]
    reply_type = "Options"

    def __post_init__(self):
        if not (2 <= len(self.options)):
            raise ValueError("option lists need at least two entries")


@dataclass
class AskRephrase:
    text: str
    reply_type = "AskRephrase"


@dataclass
class AskSlot:
    arg_name: str
    prompt: str
    reply_type = "AskSlot"


@dataclass
class Answer:
    text: str
    side: Union[AskVerify, AskDeferred, None] = None
    reply_type = "Answer"


@dataclass
class Apology:
    text: str
    reply_type = "Apology"


AgentReply = Union[ExecuteResult, Options, AskRephrase, AskSlot, AskVerify,
                   AskDeferred, Answer, Apology]


# -- session state ---------------------------------------------------------


@dataclass
class LearningTask:
    id: int
    original_command: list[Token]
    current_command: list[Token]
    ground_truth_action_id: str | None = None
    bindings: dict[str, tuple[Token, ...]] = field(default_factory=dict)
    status: str = "open"  # open | learned | abandoned
    learnable: bool = True
    confirmation: str | None = None
    questions_asked: int = 0
    rephrases_asked: int = 0
    task_domain: str | None = None


@dataclass
class Idle:
    name = "Idle"


@dataclass
class AwaitOptionChoice:
    candidates: list[Candidate]
    task: LearningTask
    name = "AwaitOptionChoice"


@dataclass
class AwaitRephrase:
    task: LearningTask
    name = "AwaitRephrase"


@dataclass
class AwaitSlot:
    action_id: str
    pending: list[str]
    bindings: dict[str, tuple[Token, ...]]
    task: LearningTask
    name = "AwaitSlot"


@dataclass
class AwaitSideAnswer:
    side: SideQuestion
    name = "AwaitSideAnswer"


Phase = Union[Idle, AwaitOptionChoice, AwaitRephrase, AwaitSlot, AwaitSideAnswer]


@dataclass
class Session:
    id: str
    user_id: str
    phase: Phase = field(default_factory=Idle)
    question_budget: int = 0
    transcript: list[dict] = field(default_factory=list)
    side_asked: bool = False
    recent_isa: dict = field(default_factory=dict)
    last_abandoned: LearningTask | None = None
    _seq: int = 0

    def log(self, kind: str, **payload) -> None:
        self._seq += 1
        self.transcript.append(
            {"seq": self._seq, "session": self.id, "kind": kind, **payload}
        )


@dataclass
class AgentSettings:
    thresholds: Thresholds = field(default_factory=Thresholds)
    alpha: float = 0.5
    option_floor: float = 0.2
    question_budget: int = 3
    rephrase_attempts: int = 2


# -- the agent itself ---------------------------------------------------------


class Agent:
    """Owns the seed-command store, the knowledge base, and all sessions.

    All mutating entry points run under a single writer (sessions are
    sequential; callers serialize concurrent sessions at operation
    granularity), so reads always see a consistent snapshot.
    """

    def __init__(
        self,
        store: SeedCommandStore,
        kb: KnowledgeBase,
        world: WorldState,
        slot_types: dict[str, SlotType] | None = None,
        settings: AgentSettings | None = None,
        relevance_keywords: list[str] | None = None,
    ):
        self.store = store
        self.kb = kb
        self.world = world
        self.slot_types = slot_types or {}
        self.settings = settings or AgentSettings()
        self.relevance_keywords = relevance_keywords
        self.sessions: dict[str, Session] = {}
        self.metrics: list[dict] = []
        self._session_counter = 0
        self._task_counter = 0

    # -- sessions ----------------------------------------------------------

    def new_session(self, user_id: str) -> Session:
        self._session_counter += 1
        session = Session(id=f"s{self._session_counter}", user_id=user_id)
        self.sessions[session.id] = session
        return session

    def session(self, session_id: str) -> Session:
        return self.sessions[session_id]

    # -- relevance ----------------------------------------------------------

    def relevance(self, text: str) -> bool:
        """Everything is relevant unless a keyword rule set is configured."""
        if self.relevance_keywords is None:
            return True
        tokens = tokenize(text)
        return any(kw in tok for kw in self.relevance_keywords for tok in tokens)

    # -- dispatcher -----------------------------------------------------------

    def utterance(self, session: Session, text: str, task_domain: str | None = None) -> AgentReply:
        """Route free text by phase: new command, rephrase, or side decline."""
        if isinstance(session.phase, AwaitSideAnswer):
            self._drop_side_question(session)
        if isinstance(session.phase, AwaitRephrase):
            return self.on_rephrase(session, text)
        return self.handle_utterance(session, text, task_domain)

    def _drop_side_question(self, session: Session) -> None:
        side = session.phase.side
        if side.kind == "deferred":
            self.kb.decline_deferred(side.deferred_id)
        session.phase = Idle()

    # -- main pipeline -----------------------------------------------------------

    def handle_utterance(
        self, session: Session, text: str, task_domain: str | None = None
    ) -> AgentReply:
        if not isinstance(session.phase, Idle):
            raise PhaseError(f"utterance while {session.phase.name}")
        tokens = tokenize(text)
        session.log("user_utterance", text=text, tokens=tokens)
        if not tokens:
            return self._reply(session, Answer(EMPTY_INPUT_TEXT))
        if not self.relevance(text):
            session.log("irrelevant", text=text)
            return self._reply(session, Answer(ACK_IRRELEVANT_TEXT))
        if is_question(tokens):
            return self._answer_question(session, tokens)

        hits = self.kb.extract_facts(tokens, session.user_id, session.recent_isa)
        if hits:
            return self._acknowledge_facts(session, hits)

        session.question_budget = self.settings.question_budget
        self._task_counter += 1
        task = LearningTask(
            id=self._task_counter,
            original_command=tokens,
            current_command=tokens,
            task_domain=task_domain,
        )
        return self._ground(session, task)

    def _answer_question(self, session: Session, tokens: list[Token]) -> AgentReply:
        try:
            outcome = self.kb.answer_query(tokens, session.user_id)
        except UnparseableQuestion:
            session.log("question_unparseable")
            return self._reply(session, Answer(ANSWER_UNPARSEABLE_TEXT))
        if outcome.answer_text is not None:
            session.log("question_answered", answer=outcome.answer_text)
            return self._reply(session, Answer(outcome.answer_text))
        session.log("question_deferred", question_id=outcome.deferred_id)
        return self._reply(session, Answer(ANSWER_UNKNOWN_TEXT))

    def _acknowledge_facts(self, session: Session, hits) -> AgentReply:
        for hit in hits:
            session.log("fact_extracted", fact_id=hit.fact.id, fact=hit.fact.text())
            if hit.fact.relation == "isa":
                question = self.kb.propose_property_question(hit.fact)
                if question is not None:
                    session.log("property_question_queued", question=question)
        return self._reply(session, Answer(ACK_FACT_TEXT))

    # -- grounding -------------------------------------------------------------

    def _ground(self, session: Session, task: LearningTask) -> AgentReply:
        snapshot = self.store.snapshot(task.task_domain)
        report = novelty_report(
            task.current_command,
            snapshot,
            top_k=self.settings.thresholds.top_k,
            alpha=self.settings.alpha,
        )
        band = classify_novelty(report, self.settings.thresholds)
        session.log(
            "novelty",
            score=report.novelty_score,
            band=band.value,
            matched=list(report.matched_spans),
            unmatched=list(report.unmatched_spans),
        )

        if band is NoveltyBand.KNOWN:
            best = report.top_k[0]
            if task.status == "open" and task.current_command != task.original_command:
                # A rephrase grounded: the original inherits its ground truth.
                task.ground_truth_action_id = best.action_id
                task.bindings = dict(best.bindings)
                task.confirmation = "rephrase_grounding"
            else:
                task.learnable = False
                task.ground_truth_action_id = best.action_id
                task.bindings = dict(best.bindings)
            return self._resolve_execution(session, task)

        if band is NoveltyBand.AMBIGUOUS_NOVEL:
            candidates = self._option_candidates(report)
            if len(candidates) >= 2:
                return self._offer_options(session, task, candidates)
        return self._ask_rephrase_or_give_up(session, task)

    def _option_candidates(self, report) -> list[Candidate]:
        """Best candidate per action above the similarity floor."""
        chosen: dict[str, Candidate] = {}
        for cand in report.top_k:
            if cand.similarity <= self.settings.option_floor:
                continue
            if cand.action_id not in chosen:
                chosen[cand.action_id] = cand
        return list(chosen.values())

    def _offer_options(
        self, session: Session, task: LearningTask, candidates: list[Candidate]
    ) -> AgentReply:
        if session.question_budget < 1:
            return self._abandon(session, task)
        session.question_budget -= 1
        task.questions_asked += 1
        session.phase = AwaitOptionChoice(candidates, task)
        options = [
            render_option_text(self.store.action(c.action_id), c.bindings)
            for c in candidates
        ]
        session.log("options_offered", options=options)
        return self._reply(session, Options(OPTIONS_PROMPT, options))

    def _ask_rephrase_or_give_up(self, session: Session, task: LearningTask) -> AgentReply:
        if (
            task.rephrases_asked >= self.settings.rephrase_attempts
            or session.question_budget < 1
        ):
            return self._abandon(session, task)
        session.question_budget -= 1
        task.questions_asked += 1
        task.rephrases_asked += 1
        session.phase = AwaitRephrase(task)
        session.log("rephrase_asked", attempts_used=task.rephrases_asked)
        return self._reply(session, AskRephrase(REPHRASE_PROMPT))

    def _abandon(self, session: Session, task: LearningTask) -> AgentReply:
        task.status = "abandoned"
        session.last_abandoned = task
        session.phase = Idle()
        session.log("task_abandoned", task_id=task.id)
        self._record_task(session, task, outcome="abandoned", action_id=None)
        return self._reply(session, Apology(GIVE_UP_TEXT))

    # -- clarification answers ------------------------------------------------------

    def on_option_choice(self, session: Session, choice: int | None) -> AgentReply:
        if not isinstance(session.phase, AwaitOptionChoice):
            raise PhaseError(f"choice while {session.phase.name}")
        phase = session.phase
        task = phase.task
        if choice is None:
            session.log("option_declined")
            session.phase = Idle()
            return self._ask_rephrase_or_give_up(session, task)
        if not (1 <= choice <= len(phase.candidates)):
            raise IndexOutOfRange(f"choice {choice} of {len(phase.candidates)} options")
        cand = phase.candidates[choice - 1]
        session.log("option_chosen", index=choice, action=cand.action_id)
        task.ground_truth_action_id = cand.action_id
        task.bindings = dict(cand.bindings)
        task.confirmation = "option_choice"
        session.phase = Idle()
        return self._resolve_execution(session, task)

    def on_rephrase(self, session: Session, text: str) -> AgentReply:
        if not isinstance(session.phase, AwaitRephrase):
            raise PhaseError(f"rephrase while {session.phase.name}")
        task = session.phase.task
        tokens = tokenize(text)
        session.log("user_rephrase", text=text, tokens=tokens)
        if not tokens:
            return self._reply(session, Answer(EMPTY_INPUT_TEXT))
        session.phase = Idle()
        task.current_command = tokens
        return self._ground(session, task)

    def on_slot_answer(self, session: Session, arg_name: str, text: str) -> AgentReply:
        if not isinstance(session.phase, AwaitSlot):
            raise PhaseError(f"slot answer while {session.phase.name}")
        phase = session.phase
        if not phase.pending or phase.pending[0] != arg_name:
            raise IndexOutOfRange(f"arg {arg_name} is not being elicited")
        value = tuple(tokenize(text))
        if not value:
            return self._reply(session, Answer(EMPTY_INPUT_TEXT))
        action = self.store.action(phase.action_id)
        slot_type = self.slot_types.get(action.arg(arg_name).slot_type)
        known = slot_type.knows(value) if slot_type else True
        session.log("slot_answer", arg=arg_name, value=list(value), in_lexicon=known)
        phase.bindings[arg_name] = value
        phase.pending.pop(0)
        task = phase.task
        task.bindings[arg_name] = value
        session.phase = Idle()
        return self._resolve_execution(session, task, bindings=phase.bindings)

    # -- execution and learning --------------------------------------------------------

    def _resolve_execution(
        self,
        session: Session,
        task: LearningTask,
        bindings: dict[str, tuple[Token, ...]] | None = None,
    ) -> AgentReply:
        action = self.store.action(task.ground_truth_action_id)
        bindings = dict(task.bindings) if bindings is None else bindings
        pending = [spec.name for spec in action.args if spec.name not in bindings]
        if pending:
            if session.question_budget < 1:
                return self._abandon(session, task)
            session.question_budget -= 1
            task.questions_asked += 1
            session.phase = AwaitSlot(action.id, pending, bindings, task)
            prompt = action.arg(pending[0]).prompt
            session.log("slot_asked", arg=pending[0])
            return self._reply(session, AskSlot(pending[0], prompt))
        return self._execute_and_finish(session, task, action, bindings)

    def _execute_and_finish(
        self,
        session: Session,
        task: LearningTask,
        action: ApiAction,
        bindings: dict[str, tuple[Token, ...]],
    ) -> AgentReply:
        args = {name: " ".join(value) for name, value in bindings.items()}
        self.world.execute(action, args)
        text = render_done_text(action, bindings)
        session.log("execution", action=action.id, args=args)

        if task.learnable and task.confirmation is not None:
            task.status = "learned"
            task.bindings = bindings
            self.learn_task(task, session)
            outcome = "executed"
        else:
            outcome = "executed_known"
        self._record_task(session, task, outcome=outcome, action_id=action.id)

        session.phase = Idle()
        reply = ExecuteResult(text)
        if not session.side_asked:
            side = self.kb.next_side_question(session.user_id)
            if side is not None:
                session.side_asked = True
                session.phase = AwaitSideAnswer(side)
                if side.kind == "verify":
                    reply.side = AskVerify(side.fact_id, side.question)
                else:
                    reply.side = AskDeferred(side.deferred_id, side.question)
                session.log("side_question", side_kind=side.kind, question=side.question)
        return self._reply(session, reply)

    def learn_task(self, task: LearningTask, session: Session) -> list[SeedCommand]:
        """Induce and store a seed command for the original command (and for
        the grounding rephrase, when there was one)."""
        if task.status != "learned":
            raise NotLearned(f"task {task.id} is {task.status}")
        action = self.store.action(task.ground_truth_action_id)
        learned = []
        commands = [task.original_command]
        if task.current_command != task.original_command:
            commands.append(task.current_command)
        for command in commands:
            pattern, always_elicit = induce_pattern(command, action, task.bindings)
            sc = self.store.add(
                pattern,
                action.id,
                Provenance.learned(session.user_id, session.id),
                always_elicit,
            )
            if sc is not None:
                learned.append(sc)
                session.log(
                    "learned_sc",
                    sc_id=sc.id,
                    pattern=[
                        el.token if isinstance(el, Lit) else f"${el.name}"
                        for el in sc.pattern
                    ],
                    action=action.id,
                    confirmation=task.confirmation,
                )
        return learned

    def record_demonstration(
        self, session: Session, action_id: str, args: dict[str, str]
    ) -> list[SeedCommand]:
        """Strategy of last resort: after an abandoned task the user shows
        the intended action (e.g. through a GUI); the agent takes the pair
        as ground truth and learns from it. The demonstration itself already
        changed the world, so nothing is executed here."""
        task = session.last_abandoned
        if task is None:
            raise PhaseError("no abandoned task to learn from")
        session.last_abandoned = None
        task.ground_truth_action_id = action_id
        task.bindings = {name: tuple(tokenize(value)) for name, value in args.items()}
        task.confirmation = "demonstration"
        task.status = "learned"
        session.log("demonstration", action=action_id, args=args)
        return self.learn_task(task, session)

    # -- side answers -----------------------------------------------------------------

    def on_side_answer(
        self, session: Session, vote: str | None = None, answer: str | None = None
    ) -> AgentReply:
        if not isinstance(session.phase, AwaitSideAnswer):
            raise PhaseError(f"side answer while {session.phase.name}")
        side = session.phase.side
        session.phase = Idle()
        if side.kind == "verify":
            if vote not in ("yes", "no"):
                raise ValueError("verification needs vote yes or no")
            fact = self.kb.verify_fact(side.fact_id, session.user_id, vote)
            session.log("verification_vote", fact_id=fact.id, vote=vote,
                        status=fact.status)
            return self._reply(session, Answer(THANKS_TEXT))
        if answer is None:
            raise ValueError("deferred question needs an answer")
        tokens = tuple(tokenize(answer))
        if " ".join(tokens) in DECLINE_FORMS:
            self.kb.decline_deferred(side.deferred_id)
            session.log("deferred_declined", question_id=side.deferred_id)
            return self._reply(session, Answer(THANKS_ANYWAY_TEXT))
        fact = self.kb.record_deferred_answer(side.deferred_id, tokens, session.user_id)
        session.log("deferred_answered", question_id=side.deferred_id, fact_id=fact.id)
        return self._reply(session, Answer(THANKS_TEXT))

    # -- bookkeeping ---------------------------------------------------------------------

    def _record_task(self, session, task, outcome: str, action_id: str | None) -> None:
        self.metrics.append(
            {
                "session": session.id,
                "user": session.user_id,
                "task": task.id,
                "outcome": outcome,
                "action": action_id,
                "questions": task.questions_asked,
                "first_try": outcome.startswith("executed")
                and task.questions_asked == 0,
                "store_size": len(self.store),
            }
        )

    def _reply(self, session: Session, reply: AgentReply) -> AgentReply:
        session.log("agent_reply", reply=reply_to_wire(reply))
        return reply


def induce_pattern(
    command: list[Token],
    action: ApiAction,
    bindings: dict[str, tuple[Token, ...]],
) -> tuple[tuple[PatternElement, ...], frozenset[str]]:
    """Lift bound argument values into variables to form a new pattern.

    Each bound value that occurs verbatim in the command replaces its
    leftmost occurrence with a typed variable; arguments whose values do
    not occur are marked always-elicit. If lifting would break the pattern
    grammar, the whole command is kept literal with every argument
    always-elicit.
    """
    elements: list[PatternElement] = [Lit(tok) for tok in command]
    always: set[str] = set()
    for spec in action.args:
        value = bindings.get(spec.name)
        if not value:
            always.add(spec.name)
            continue
        placed = False
        for i in range(len(elements) - len(value) + 1):
            window = elements[i : i + len(value)]
            if all(isinstance(el, Lit) for el in window) and tuple(
                el.token for el in window
            ) == tuple(value):
                elements[i : i + len(value)] = [Var(spec.name, spec.slot_type)]
                placed = True
                break
        if not placed:
            always.add(spec.name)
    pattern = tuple(elements)
    try:
        validate_pattern(pattern, action)
    except Exception:
        pattern = tuple(Lit(tok) for tok in command)
        always = {spec.name for spec in action.args}
    return pattern, frozenset(always)


def reply_to_wire(reply: AgentReply) -> dict:
    """Tagged JSON shape shared by the HTTP API and the transcript log."""
    if isinstance(reply, ExecuteResult):
        out = {"replyType": "ExecuteResult", "text": reply.text}
        if reply.side is not None:
            out["side"] = reply_to_wire(reply.side)
        return out
    if isinstance(reply, Options):
        return {"replyType": "Options", "prompt": reply.prompt,
                "options": list(reply.options)}
    if isinstance(reply, AskRephrase):
        return {"replyType": "AskRephrase", "text": reply.text}
    if isinstance(reply, AskSlot):
        return {"replyType": "AskSlot", "argName": reply.arg_name,
                "prompt": reply.prompt}
    if isinstance(reply, AskVerify):
        return {"replyType": "AskVerify", "factRef": reply.fact_ref,
                "question": reply.question}
    if isinstance(reply, AskDeferred):
        return {"replyType": "AskDeferred", "questionRef": reply.question_ref,
                "question": reply.question}
    if isinstance(reply, Answer):
        out = {"replyType": "Answer", "text": reply.text}
        if reply.side is not None:
            out["side"] = reply_to_wire(reply.side)
        return out
    if isinstance(reply, Apology):
        return {"replyType": "Apology", "text": reply.text}
    raise TypeError(f"not a reply: {reply!r}")
