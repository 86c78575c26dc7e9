// HTTP client and auto-reconnecting event stream for the control service.

import type { Snapshot, StreamEvent } from "./types.js"

export class ApiError extends Error {
    status: number

    constructor(status: number, detail: string) {
        super(detail)
        this.status = status
    }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>

export class ApiClient {
    private base: string
    private fetchFn: FetchLike

    constructor(base = "", fetchFn: FetchLike = (u, i) => fetch(u, i)) {
        this.base = base.replace(/\/$/, "")
        this.fetchFn = fetchFn
    }

    private async request(path: string, init?: RequestInit): Promise<any> {
        const response = await this.fetchFn(this.base + path, init)
        let body: any = null
        try {
            body = await response.json()
        } catch {
            // non-JSON error body; detail stays generic
        }
        if (!response.ok) {
            const detail = body && body.detail ? String(body.detail) : response.statusText
            throw new ApiError(response.status, detail)
        }
        return body
    }

    private post(path: string, payload: unknown): Promise<any> {
        return this.request(path, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(payload),
        })
    }

    snapshot(): Promise<Snapshot> {
        return this.request("/api/snapshot")
    }

    agentStatus(name: string): Promise<any> {
        return this.request(`/api/agents/${encodeURIComponent(name)}`)
    }

    setThreshold(task: string, value: number): Promise<any> {
        return this.post("/api/threshold", { task, value })
    }

    setSensorMode(channel: string, mode: string): Promise<any> {
        return this.post(`/api/sensors/${encodeURIComponent(channel)}`, { mode })
    }

    replay(action: string, extra: Record<string, unknown> = {}): Promise<any> {
        return this.post("/api/replay", { action, ...extra })
    }

    train(task: string, overrides: Record<string, unknown> = {}): Promise<any> {
        return this.post("/api/train", { task, ...overrides })
    }
}

export interface SocketLike {
    onopen: ((ev?: unknown) => void) | null
    onclose: ((ev?: unknown) => void) | null
    onerror: ((ev?: unknown) => void) | null
    onmessage: ((ev: { data: unknown }) => void) | null
    close(): void
}

export type SocketFactory = (url: string) => SocketLike

export interface StreamOptions {
    onEvent: (event: StreamEvent) => void
    onStatus?: (status: "connecting" | "open" | "closed") => void
    /** called on every (re)connect after the first open */
    onReconnect?: () => void
    baseDelayMs?: number
    maxDelayMs?: number
    socketFactory?: SocketFactory
    setTimeoutFn?: (fn: () => void, ms: number) => unknown
}

/** WebSocket wrapper with exponential-backoff reconnect. */
export class StreamSocket {
    private url: string
    private options: Required<Pick<StreamOptions, "baseDelayMs" | "maxDelayMs">> &
        StreamOptions
    private socket: SocketLike | null = null
    private attempts = 0
    private stopped = false
    private everOpened = false

    constructor(url: string, options: StreamOptions) {
        this.url = url
        this.options = { baseDelayMs: 500, maxDelayMs: 10_000, ...options }
    }

    start(): void {
        this.stopped = false
        this.connect()
    }

    stop(): void {
        this.stopped = true
        if (this.socket) this.socket.close()
        this.socket = null
    }

    /** delay before reconnect attempt n (0-based): base * 2^n, capped */
    backoffDelay(attempt: number): number {
        return Math.min(
            this.options.maxDelayMs,
            this.options.baseDelayMs * 2 ** attempt,
        )
    }

    private connect(): void {
        if (this.stopped) return
        this.options.onStatus?.("connecting")
        const factory: SocketFactory =
            this.options.socketFactory ?? ((u) => new WebSocket(u) as unknown as SocketLike)
        const socket = factory(this.url)
        this.socket = socket
        socket.onopen = () => {
            this.attempts = 0
            this.options.onStatus?.("open")
            if (this.everOpened) this.options.onReconnect?.()
            this.everOpened = true
        }
        socket.onmessage = (ev) => {
            let event: StreamEvent
            try {
                event = JSON.parse(String(ev.data)) as StreamEvent
            } catch {
                return // malformed frame: ignore
            }
            this.options.onEvent(event)
        }
        socket.onclose = () => {
            this.options.onStatus?.("closed")
            if (this.stopped) return
            const delay = this.backoffDelay(this.attempts)
            this.attempts += 1
            const timer = this.options.setTimeoutFn ?? setTimeout
            timer(() => this.connect(), delay)
        }
        socket.onerror = () => {
            // close follows; reconnect is handled there
        }
    }
}
