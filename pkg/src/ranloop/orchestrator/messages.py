"""Typed inter-agent messages and the per-run mailbox router.

Delivery is at-most-once into the recipient's ordered mailbox with per-sender
FIFO; the router refuses deliveries once the run is terminal.
"""

from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass

from ranloop.errors import NotFoundError, StateError, ValidationError

ROLES = ("master", "analysis", "historical", "documentation", "validation")

INTENT_TAGS = (
    "diagnose_request",
    "diagnose_result",
    "precedents_request",
    "precedents_result",
    "docs_request",
    "docs_result",
    "validate_request",
    "validate_result",
)


@dataclass(frozen=True)
class AgentMessage:
    message_id: str
    correlation_id: str  # run id
    sender: str
    recipient: str
    intent_tag: str
    payload: dict
    sent_at: int  # logical clock within the run

    def validate(self) -> None:
        if self.sender == self.recipient:
            raise ValidationError("sender and recipient must differ", field_path="recipient")
        for role_field, role in (("sender", self.sender), ("recipient", self.recipient)):
            if role not in ROLES:
                raise ValidationError(f"unknown role: {role}", field_path=role_field)
        if self.intent_tag not in INTENT_TAGS:
            raise ValidationError(f"unknown intent tag: {self.intent_tag}", field_path="intent_tag")

    def to_payload(self) -> dict:
        return {
            "message_id": self.message_id,
            "correlation_id": self.correlation_id,
            "sender": self.sender,
            "recipient": self.recipient,
            "intent_tag": self.intent_tag,
            "payload": self.payload,
            "sent_at": self.sent_at,
        }


@dataclass(frozen=True)
class DeliveryReceipt:
    message_id: str
    recipient: str
    position: int  # 1-based enqueue position in the recipient's mailbox


class MailboxRouter:
    def __init__(self, run_id: str):
        self.run_id = run_id
        self._mailboxes: dict[str, deque[AgentMessage]] = {}
        self._delivered: dict[str, int] = {}  # recipient -> total enqueued
        self._seen_ids: set[str] = set()
        self._closed = False
        self._clock = 0
        self._counter = 0
        self._lock = threading.RLock()

    def register(self, role: str) -> None:
        if role not in ROLES:
            raise ValidationError(f"unknown role: {role}", field_path="role")
        with self._lock:
            self._mailboxes.setdefault(role, deque())

    def registered_roles(self) -> set[str]:
        return set(self._mailboxes)

    def next_message_id(self) -> str:
        with self._lock:
            self._counter += 1
            return f"msg-{self._counter:04d}"

    def tick(self) -> int:
        with self._lock:
            self._clock += 1
            return self._clock

    def dispatch(self, message: AgentMessage) -> DeliveryReceipt:
        message.validate()
        with self._lock:
            if self._closed:
                raise StateError("mailboxes are closed: run is terminal")
            if message.recipient not in self._mailboxes:
                raise NotFoundError(f"unknown recipient role: {message.recipient}")
            if message.message_id in self._seen_ids:  # at-most-once
                raise StateError(f"duplicate message id: {message.message_id}")
            self._seen_ids.add(message.message_id)
            self._mailboxes[message.recipient].append(message)
            self._delivered[message.recipient] = self._delivered.get(message.recipient, 0) + 1
            return DeliveryReceipt(
                message_id=message.message_id,
                recipient=message.recipient,
                position=self._delivered[message.recipient],
            )

    def take(self, role: str) -> AgentMessage | None:
        with self._lock:
            box = self._mailboxes.get(role)
            if box is None:
                raise NotFoundError(f"unknown recipient role: {role}")
            return box.popleft() if box else None

    def close(self) -> None:
        with self._lock:
            self._closed = True
