// Typed fetch client for the announcer HTTP API. Every mutation the
// console performs goes through these functions and nowhere else.

export interface TokenResponse {
  token: string;
  staff_id: string;
  role: string;
  expires_at: number;
}

export interface Student {
  student_id: string;
  name: string;
  phone: string;
  email: string;
  program: string;
}

export interface Message {
  msg_id: number;
  student_id: string;
  channel: string;
  dest: string;
  body: string;
  status: string;
  smsc_message_id: string | null;
  attempts: number;
}

export interface Batch {
  batch_id: number;
  kind: string;
  created_by: string;
  state: string;
  created_at: string;
  decided_at: string | null;
  decided_by: string | null;
  total: number;
  sendable: number;
}

export interface BatchDetail extends Batch {
  messages: Message[];
}

export interface Report {
  batch_id: number;
  state: string;
  sent: number;
  delivered: number;
  failed: number;
  skipped: number;
  pending: number;
  total: number;
  messages: Message[];
}

export interface FeeScanItem {
  invoice_id: string;
  student_id: string;
  student_name: string;
  balance: string;
  due_date: string;
  days_overdue: number;
}

export interface LoanScanItem {
  loan_id: string;
  student_id: string;
  student_name: string;
  book_title: string;
  due_date: string;
  days_overdue: number;
  fine: string;
}

export interface TriggerResponse {
  batch: Batch | null;
  suppressed: boolean;
}

/** API errors carry the server's {code, message} verbatim. */
export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

export class ApiClient {
  token: string | null = null;

  constructor(public baseUrl: string = '') {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers['Content-Type'] = 'application/json';
    if (this.token) headers['Authorization'] = `Bearer ${this.token}`;
    let resp: Response;
    try {
      resp = await fetch(`${this.baseUrl}${path}`, {
        method,
        headers,
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ApiError(0, 'API_UNREACHABLE', String(err));
    }
    if (!resp.ok) {
      let code = `HTTP_${resp.status}`;
      let message = resp.statusText;
      try {
        const payload = await resp.json();
        if (payload && payload.code) {
          code = payload.code;
          message = payload.message ?? message;
        }
      } catch {
        // non-JSON error body: keep the HTTP status code
      }
      throw new ApiError(resp.status, code, message);
    }
    return (await resp.json()) as T;
  }

  async login(staffId: string, password: string): Promise<TokenResponse> {
    const out = await this.request<TokenResponse>('POST', '/api/login', {
      staff_id: staffId,
      password,
    });
    this.token = out.token;
    return out;
  }

  me() {
    return this.request<{ staff_id: string; role: string; courses: string[] }>(
      'GET', '/api/me',
    );
  }

  studentsForCourse(course: string) {
    return this.request<Student[]>('GET', `/api/students?course=${encodeURIComponent(course)}`);
  }

  myStudents() {
    return this.request<Student[]>('GET', '/api/students?lecturer=me');
  }

  announce(body: string, target: { course_code?: string; student_ids?: string[] }) {
    return this.request<Batch>('POST', '/api/announce', { body, ...target });
  }

  scanFees(asOf?: string) {
    const q = asOf ? `?as_of=${asOf}` : '';
    return this.request<FeeScanItem[]>('GET', `/api/scans/fees${q}`);
  }

  scanLoans(asOf?: string) {
    const q = asOf ? `?as_of=${asOf}` : '';
    return this.request<LoanScanItem[]>('GET', `/api/scans/loans${q}`);
  }

  batches(state?: string) {
    const q = state ? `?state=${encodeURIComponent(state)}` : '';
    return this.request<Batch[]>('GET', `/api/batches${q}`);
  }

  batch(id: number) {
    return this.request<BatchDetail>('GET', `/api/batches/${id}`);
  }

  approve(id: number) {
    return this.request<Batch>('POST', `/api/batches/${id}/approve`);
  }

  reject(id: number) {
    return this.request<Batch>('POST', `/api/batches/${id}/reject`);
  }

  report(id: number) {
    return this.request<Report>('GET', `/api/batches/${id}/report`);
  }

  trigger(kind: 'fees' | 'library', asOf?: string) {
    return this.request<TriggerResponse>(
      'POST',
      `/api/autorun/${kind}/trigger`,
      asOf ? { as_of: asOf } : {},
    );
  }
}
