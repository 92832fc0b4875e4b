// Single-page staff console: hash-routed, framework-free.
// Pages: login, compose (lecturers), scans + approval inbox
// (records/library), batch detail with per-message statuses.

import { ApiClient, ApiError, Batch, BatchDetail, Report } from './api.js';
import { ConsoleFlows, POLL_INTERVAL_MS, homeFor } from './flows.js';
import { counterLabel } from './segments.js';

const api = new ApiClient('');
const flows = new ConsoleFlows(api);

const root = document.getElementById('app') as HTMLElement;
let pollTimer: number | null = null;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === 'class') node.className = value;
    else node.setAttribute(key, value);
  }
  node.append(...children);
  return node;
}

function stopPolling() {
  if (pollTimer !== null) {
    clearInterval(pollTimer);
    pollTimer = null;
  }
}

function errorBanner(err: unknown): HTMLElement {
  const code = err instanceof ApiError ? err.code : 'ERROR';
  const message = err instanceof Error ? err.message : String(err);
  return el('div', { class: 'error' }, `${code}: ${message}`);
}

function stateChip(state: string): HTMLElement {
  return el('span', { class: `chip chip-${state.toLowerCase()}` }, state);
}

function navigate(page: string) {
  window.location.hash = `#/${page}`;
}

function render() {
  stopPolling();
  const page = window.location.hash.replace(/^#\//, '') || 'login';
  if (!flows.session && page !== 'login') {
    navigate('login');
    return;
  }
  root.replaceChildren(header(page));
  const body = el('main', {});
  root.append(body);
  const views: Record<string, (target: HTMLElement) => void> = {
    login: renderLogin,
    compose: renderCompose,
    inbox: renderInbox,
    scans: renderScans,
    batches: renderBatches,
  };
  const view = page.startsWith('batch/') ? renderBatchDetail : views[page] ?? renderLogin;
  view(body);
}

function header(active: string): HTMLElement {
  const session = flows.session;
  const nav = el('nav', {});
  if (session) {
    const links: [string, string][] = [];
    if (session.role === 'LECTURER') links.push(['compose', 'Compose']);
    if (session.role !== 'LECTURER') {
      links.push(['inbox', 'Approvals']);
      links.push(['scans', 'Scans']);
    }
    links.push(['batches', 'Batches']);
    for (const [page, label] of links) {
      const a = el('a', { href: `#/${page}` }, label);
      if (active === page) a.classList.add('active');
      nav.append(a);
    }
    nav.append(
      el('span', { class: 'who' }, `${session.staffId} (${session.role})`),
    );
  }
  return el('header', {}, el('h1', {}, 'Event Announcer'), nav);
}

// -- login ---------------------------------------------------------------

function renderLogin(body: HTMLElement) {
  const staffId = el('input', { name: 'staff_id', placeholder: 'staff id' });
  const password = el('input', {
    name: 'password', type: 'password', placeholder: 'password',
  });
  const message = el('div', {});
  const form = el('form', {}, staffId, password,
    el('button', { type: 'submit' }, 'Log in'), message);
  form.addEventListener('submit', async (event) => {
    event.preventDefault();
    message.replaceChildren();
    try {
      const home = await flows.login(staffId.value.trim(), password.value);
      navigate(home);
    } catch (err) {
      message.replaceChildren(errorBanner(err));
    }
  });
  body.append(el('section', { class: 'login' }, form));
}

// -- compose (Fig. 1 path) ---------------------------------------------------

async function renderCompose(body: HTMLElement) {
  const section = el('section', { class: 'compose' });
  body.append(section);

  const courseSelect = el('select', { name: 'course' });
  courseSelect.append(el('option', { value: '' }, 'whole timetable (all students)'));
  const picker = el('div', { class: 'picker' });
  try {
    const who = await flows.api.me();
    for (const course of who.courses) {
      courseSelect.append(el('option', { value: course }, course));
    }
  } catch (err) {
    section.append(errorBanner(err));
  }

  // student picker: tick individuals within the chosen course, or leave
  // every box ticked to address the whole selection
  const drawPicker = async () => {
    try {
      const students = courseSelect.value
        ? await flows.api.studentsForCourse(courseSelect.value)
        : await flows.api.myStudents();
      picker.replaceChildren(
        ...students.map((s) => {
          const box = el('input', {
            type: 'checkbox', value: s.student_id, checked: '',
          });
          return el('label', { class: 'pick' }, box, ` ${s.student_id} ${s.name}`);
        }),
      );
    } catch (err) {
      picker.replaceChildren(errorBanner(err));
    }
  };
  courseSelect.addEventListener('change', drawPicker);
  await drawPicker();

  const text = el('textarea', { rows: '5', placeholder: 'announcement text' });
  const counter = el('div', { class: 'counter' }, '0 chars');
  text.addEventListener('input', () => {
    counter.textContent = counterLabel(text.value);
  });
  const message = el('div', {});
  const send = el('button', {}, 'Send');
  send.addEventListener('click', async () => {
    message.replaceChildren(el('em', {}, 'sending…'));
    const ticked = [...picker.querySelectorAll<HTMLInputElement>('input:checked')]
      .map((box) => box.value);
    try {
      const report = await flows.composeAndSend(text.value, { student_ids: ticked }, {
        intervalMs: POLL_INTERVAL_MS,
        onUpdate: (r: Report) => {
          message.replaceChildren(reportLine(r));
        },
      });
      message.replaceChildren(reportLine(report));
    } catch (err) {
      message.replaceChildren(errorBanner(err));
    }
  });
  section.append(courseSelect, picker, text, counter, send, message);
}

function reportLine(report: Report): HTMLElement {
  return el(
    'div',
    { class: 'report' },
    stateChip(report.state),
    ` sent=${report.sent} delivered=${report.delivered} failed=${report.failed} ` +
      `skipped=${report.skipped} pending=${report.pending} of ${report.total}`,
  );
}

// -- approval inbox (Fig. 2 prompt) ---------------------------------------------

async function renderInbox(body: HTMLElement) {
  const section = el('section', { class: 'inbox' });
  body.append(section);

  const draw = async () => {
    try {
      const pending = await flows.loadInbox();
      const list = el('div', {});
      if (pending.length === 0) {
        list.append(el('p', {}, 'No batches waiting for approval.'));
      }
      for (const batch of pending) {
        list.append(await inboxRow(batch));
      }
      section.replaceChildren(el('h2', {}, 'Waiting for approval'), list);
    } catch (err) {
      section.replaceChildren(errorBanner(err));
    }
  };

  await draw();
  pollTimer = window.setInterval(draw, POLL_INTERVAL_MS);
}

async function inboxRow(batch: Batch): Promise<HTMLElement> {
  const row = el(
    'div',
    { class: 'batch-row' },
    el('a', { href: `#/batch/${batch.batch_id}` },
      `#${batch.batch_id} ${batch.kind}`),
    stateChip(batch.state),
    el('span', {}, ` ${batch.sendable}/${batch.total} sendable, by ${batch.created_by}`),
  );
  const outcome = el('span', {});
  const approve = el('button', {}, 'Approve');
  const reject = el('button', { class: 'danger' }, 'Reject');
  const act = (decision: 'approve' | 'reject') => async () => {
    approve.setAttribute('disabled', '');
    reject.setAttribute('disabled', '');
    try {
      const result = await flows.decide(batch.batch_id, decision);
      if (result.ok && result.batch) {
        row.replaceChildren(
          el('a', { href: `#/batch/${batch.batch_id}` }, `#${batch.batch_id}`),
          stateChip(result.batch.state),
        );
      } else {
        outcome.replaceChildren(
          errorBanner(new ApiError(409, result.errorCode ?? 'WRONG_STATE',
            result.errorMessage ?? 'already decided')),
          result.batch ? stateChip(result.batch.state) : '',
        );
      }
    } catch (err) {
      outcome.replaceChildren(errorBanner(err));
    }
  };
  approve.addEventListener('click', act('approve'));
  reject.addEventListener('click', act('reject'));
  row.append(approve, reject, outcome);
  return row;
}

// -- scans -------------------------------------------------------------------

async function renderScans(body: HTMLElement) {
  const section = el('section', { class: 'scans' });
  body.append(section);
  const role = flows.session?.role;
  try {
    if (role === 'RECORDS' || role === 'ADMIN') {
      const fees = await flows.api.scanFees();
      const table = el('table', {},
        el('tr', {}, ...['invoice', 'student', 'balance', 'due', 'days overdue']
          .map((h) => el('th', {}, h))));
      for (const item of fees) {
        table.append(el('tr', {},
          el('td', {}, item.invoice_id),
          el('td', {}, `${item.student_name} (${item.student_id})`),
          el('td', {}, `RM${item.balance}`),
          el('td', {}, item.due_date),
          el('td', {}, String(item.days_overdue))));
      }
      section.append(el('h2', {}, `Unpaid fees (${fees.length})`), table);
    }
    if (role === 'LIBRARY' || role === 'ADMIN') {
      const loans = await flows.api.scanLoans();
      const table = el('table', {},
        el('tr', {}, ...['loan', 'student', 'book', 'due', 'days', 'fine']
          .map((h) => el('th', {}, h))));
      for (const item of loans) {
        table.append(el('tr', {},
          el('td', {}, item.loan_id),
          el('td', {}, `${item.student_name} (${item.student_id})`),
          el('td', {}, item.book_title),
          el('td', {}, item.due_date),
          el('td', {}, String(item.days_overdue)),
          el('td', {}, `RM${item.fine}`)));
      }
      section.append(el('h2', {}, `Overdue books (${loans.length})`), table);
    }
    const kind = role === 'LIBRARY' ? 'library' : 'fees';
    const trigger = el('button', {}, `Run ${kind} autorun now`);
    trigger.addEventListener('click', async () => {
      try {
        const out = await flows.api.trigger(kind as 'fees' | 'library');
        if (out.batch) navigate(`batch/${out.batch.batch_id}`);
        else trigger.after(el('span', {}, ' nothing to send (suppressed)'));
      } catch (err) {
        trigger.after(errorBanner(err));
      }
    });
    section.append(trigger);
  } catch (err) {
    section.append(errorBanner(err));
  }
}

// -- batches overview + detail ---------------------------------------------------

async function renderBatches(body: HTMLElement) {
  const section = el('section', {});
  body.append(section);
  const draw = async () => {
    try {
      const grouped = await flows.loadGrouped();
      section.replaceChildren(el('h2', {}, 'All batches'));
      for (const [state, batches] of grouped) {
        const list = el('ul', {});
        for (const batch of batches) {
          list.append(el('li', {},
            el('a', { href: `#/batch/${batch.batch_id}` },
              `#${batch.batch_id} ${batch.kind} (${batch.total})`)));
        }
        section.append(el('h3', {}, state, ` (${batches.length})`), list);
      }
    } catch (err) {
      section.replaceChildren(errorBanner(err));
    }
  };
  await draw();
  pollTimer = window.setInterval(draw, POLL_INTERVAL_MS);
}

async function renderBatchDetail(body: HTMLElement) {
  const id = Number(window.location.hash.split('/')[2]);
  const section = el('section', {});
  body.append(section);
  const draw = async () => {
    try {
      const detail: BatchDetail = await flows.api.batch(id);
      const table = el('table', {},
        el('tr', {}, ...['student', 'channel', 'dest', 'status', 'body']
          .map((h) => el('th', {}, h))));
      for (const msg of detail.messages) {
        table.append(el('tr', {},
          el('td', {}, msg.student_id),
          el('td', {}, msg.channel),
          el('td', {}, msg.dest),
          el('td', {}, msg.status),
          el('td', { class: 'preview' }, msg.body)));
      }
      const headerRow = el('div', {},
        el('h2', {}, `Batch #${detail.batch_id} `), stateChip(detail.state),
        el('p', {}, `${detail.kind}, created ${detail.created_at} by ${detail.created_by}` +
          (detail.decided_by ? `, decided by ${detail.decided_by}` : '')));
      section.replaceChildren(headerRow, table);
      if (detail.state === 'PENDING_APPROVAL') {
        section.append(await inboxRow(detail));
      }
    } catch (err) {
      section.replaceChildren(errorBanner(err));
    }
  };
  await draw();
  pollTimer = window.setInterval(draw, POLL_INTERVAL_MS);
}

window.addEventListener('hashchange', render);
window.addEventListener('DOMContentLoaded', render);
