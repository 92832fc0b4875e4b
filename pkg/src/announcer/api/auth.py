"""Login and bearer-token sessions.

Tokens are 128-bit CSPRNG hex, held in memory with an expiry (default
8 h).  Password checks are constant-time and indistinguishable between
unknown staff ids and wrong passwords.
"""

from __future__ import annotations

import hmac
import secrets
import threading
import time
from dataclasses import dataclass

from ..registry import Registry, hash_password

TOKEN_TTL_SECONDS = 8 * 3600

# burned at import time so unknown-id logins hash against something
_DUMMY_SALT = bytes(16)
_DUMMY_HASH = hash_password("invalid-password-placeholder", _DUMMY_SALT)


class BadCredentials(Exception):
    code = "BAD_CREDENTIALS"


@dataclass(frozen=True)
class TokenInfo:
    token: str
    staff_id: str
    role: str
    expires_at: float


class TokenStore:
    def __init__(self, ttl_seconds: float = TOKEN_TTL_SECONDS, clock=time.time):
        self._tokens: dict[str, TokenInfo] = {}
        self._lock = threading.Lock()
        self._ttl = ttl_seconds
        self._clock = clock

    def mint(self, staff_id: str, role: str) -> TokenInfo:
        info = TokenInfo(
            token=secrets.token_hex(16),
            staff_id=staff_id,
            role=role,
            expires_at=self._clock() + self._ttl,
        )
        with self._lock:
            self._tokens[info.token] = info
        return info

    def lookup(self, token: str) -> TokenInfo | None:
        with self._lock:
            info = self._tokens.get(token)
        if info is None or info.expires_at <= self._clock():
            return None
        return info

    def expire(self, token: str) -> None:
        with self._lock:
            info = self._tokens.get(token)
            if info is not None:
                self._tokens[token] = TokenInfo(
                    token=info.token, staff_id=info.staff_id,
                    role=info.role, expires_at=0.0,
                )


def login(registry: Registry, tokens: TokenStore, staff_id: str, password: str) -> TokenInfo:
    """Verify credentials and mint a session token.

    Unknown ids burn the same hash work as wrong passwords so the two
    cases cannot be told apart by timing or by response body.
    """
    staff = registry.staff_by_id(staff_id)
    if staff is None:
        computed = hash_password(password, _DUMMY_SALT)
        hmac.compare_digest(computed, _DUMMY_HASH)
        raise BadCredentials("bad credentials")
    computed = hash_password(password, bytes.fromhex(staff.salt))
    if not hmac.compare_digest(computed, staff.password_hash):
        raise BadCredentials("bad credentials")
    return tokens.mint(staff.staff_id, staff.role)
