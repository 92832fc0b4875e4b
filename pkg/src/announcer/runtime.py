"""Wires the whole service together: database, registry, batch store,
templates, gateway session, receipt pump and the autorun scheduler.

`serve` builds one of these and hands it to the FastAPI app; tests
build them against a simulator.
"""

from __future__ import annotations

import logging
import threading
import time
from datetime import date
from zoneinfo import ZoneInfo

from . import gateway
from .api.auth import TokenStore
from .config import Config
from .notifier import autorun, dispatch
from .notifier import store as batch_store_mod
from .notifier.build import POLICY_SMS_FIRST
from .notifier.templates import load_templates
from .registry import Database, Registry

log = logging.getLogger("announcer.runtime")


class Runtime:
    def __init__(self, config: Config, connect_gateway: bool = True):
        self.config = config
        self.db = Database(config.db_path)
        self.registry = Registry(self.db, default_country=config.default_country)
        self.batch_store = batch_store_mod.BatchStore(self.db)
        self.templates = load_templates(config.templates_path)
        self.tz = ZoneInfo(config.timezone)
        self.tokens = TokenStore()
        self.receipt_pump = dispatch.ReceiptPump(self.batch_store)
        self._gateway_enabled = connect_gateway
        self._session: gateway.Session | None = None
        self._session_lock = threading.Lock()
        self.scheduler: autorun.Scheduler | None = None

    # -- gateway -----------------------------------------------------------

    def gateway_session(self) -> gateway.Session:
        """Current bound session, reconnecting when the old one died."""
        if not self._gateway_enabled:
            raise gateway.SessionDown("gateway disabled")
        with self._session_lock:
            if self._session is None or not self._session.is_bound:
                cfg = self.config
                self._session = gateway.connect_and_bind(
                    gateway.SessionConfig(
                        host=cfg.smsc_host,
                        port=cfg.smsc_port,
                        system_id=cfg.smsc_system_id,
                        password=cfg.smsc_password,
                        window_size=cfg.window_size,
                        throttle=cfg.throttle,
                        enquire_interval=cfg.enquire_interval,
                        retry_max=cfg.retry_max,
                        retry_backoff=cfg.retry_backoff,
                        resp_timeout=cfg.resp_timeout,
                    )
                )
                self._session.on_receipt(self.receipt_pump.handler)
            return self._session

    # -- notifier operations -------------------------------------------------

    def autorun_tick(
        self, kind: str, now_ts: float | None = None, as_of: date | None = None
    ):
        cfg = self.config
        return autorun.autorun_tick(
            kind,
            time.time() if now_ts is None else now_ts,
            registry=self.registry,
            batch_store=self.batch_store,
            template_map=self.templates,
            tz=self.tz,
            cooldown_days=cfg.cooldown_days,
            fine_rate_per_day=cfg.fine_rate_per_day,
            fine_cap=cfg.fine_cap,
            channel_policy=POLICY_SMS_FIRST,
            suppress_empty=cfg.suppress_empty,
            as_of=as_of,
        )

    def dispatch_batch(self, batch_id: int):
        return dispatch.dispatch_batch(
            self.batch_store,
            batch_id,
            self.gateway_session,
            self.config.spool_dir,
            cooldown_days=self.config.cooldown_days,
        )

    def dispatch_detached(self, batch_id: int) -> threading.Thread:
        """Kick off dispatch without blocking the caller; progress is
        polled through the report endpoint."""

        def run():
            try:
                self.dispatch_batch(batch_id)
            except batch_store_mod.NotifierError as exc:
                log.warning("detached dispatch of batch %d: %s", batch_id, exc)
            except Exception:
                log.exception("detached dispatch of batch %d crashed", batch_id)

        thread = threading.Thread(
            target=run, name=f"dispatch-{batch_id}", daemon=True
        )
        thread.start()
        return thread

    def resume_incomplete(self) -> list[int]:
        return dispatch.resume_incomplete_batches(
            self.batch_store,
            self.gateway_session,
            self.config.spool_dir,
            cooldown_days=self.config.cooldown_days,
        )

    def start_scheduler(self) -> None:
        jobs = {
            autorun.KIND_FEES: self.config.autorun_fees_at,
            autorun.KIND_LIBRARY: self.config.autorun_library_at,
        }

        def run_kind(kind: str):
            batch = self.autorun_tick(kind)
            if batch is not None:
                log.info("autorun %s drafted batch %d", kind, batch.batch_id)

        self.scheduler = autorun.Scheduler(jobs, self.tz, run_kind)
        self.scheduler.start()

    def close(self) -> None:
        if self.scheduler is not None:
            self.scheduler.stop()
        self.receipt_pump.stop()
        with self._session_lock:
            if self._session is not None:
                self._session.unbind_and_close()
                self._session = None
        self.db.close()
