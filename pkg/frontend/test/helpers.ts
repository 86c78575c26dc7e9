// Shared fixtures: a default-wiring snapshot and a scriptable fake socket.

import type { SocketLike } from "../src/api.js"
import type { DecisionEntry, Snapshot, StreamEvent } from "../src/types.js"

export const CHANNELS = [
    "CE", "CP", "EPS1", "FS1", "FS2", "PS1", "PS2", "PS3", "PS4", "PS5", "PS6",
    "SE", "TS1", "TS2", "TS3", "TS4", "VS1",
]

export const TASK_NAMES = ["cooler", "valve", "pump_leak", "accumulator", "stable_flag"]

export function defaultSnapshot(): Snapshot {
    const nodes = [
        ...CHANNELS.map((c) => ({ name: c, role: "Sensor", state: "Active" })),
        { name: "aggregator", role: "Aggregator", state: "Running" },
        ...TASK_NAMES.map((t) => ({
            name: `predictor-${t}`, role: "Predictor", state: "Running",
        })),
        { name: "trainer", role: "ModelTrainer", state: "Running" },
        { name: "decision-maker", role: "DecisionMaker", state: "Running" },
        { name: "ui", role: "UserInterface", state: "Running" },
    ]
    const edges: [string, string][] = [
        ...CHANNELS.map((c): [string, string] => [c, "aggregator"]),
        ...TASK_NAMES.map((t): [string, string] => ["aggregator", `predictor-${t}`]),
        ...TASK_NAMES.map((t): [string, string] => ["trainer", `predictor-${t}`]),
        ...TASK_NAMES.map((t): [string, string] => [`predictor-${t}`, "decision-maker"]),
        ["decision-maker", "ui"],
        ["decision-maker", "trainer"],
    ]
    return {
        topology: { nodes, edges },
        replay: { state: "idle", position: 0, speed: 60 },
        thresholds: Object.fromEntries(TASK_NAMES.map((t) => [t, 0.8])),
        sensor_modes: Object.fromEntries(
            CHANNELS.map((c) => [c, { mode: "Active", noise_sigma: null }]),
        ),
        deployed_tasks: [...TASK_NAMES],
    }
}

export function decisionEvent(
    cycle: number,
    certainty = 0.9,
    threshold = 0.8,
): StreamEvent {
    const entries: Record<string, DecisionEntry> = {}
    for (const task of TASK_NAMES) {
        entries[task] = {
            modal_class: 0,
            class_label: 3,
            certainty,
            verdict: certainty >= threshold ? "certain" : "uncertain",
            threshold,
        }
    }
    return {
        kind: "decision",
        payload: { entries },
        cycle_index: cycle,
        timestamp_ms: 1000 + cycle,
    }
}

export class FakeSocket implements SocketLike {
    onopen: ((ev?: unknown) => void) | null = null
    onclose: ((ev?: unknown) => void) | null = null
    onerror: ((ev?: unknown) => void) | null = null
    onmessage: ((ev: { data: unknown }) => void) | null = null
    closed = false
    url: string

    constructor(url: string) {
        this.url = url
    }

    open(): void {
        this.onopen?.()
    }

    emit(event: StreamEvent): void {
        this.onmessage?.({ data: JSON.stringify(event) })
    }

    drop(): void {
        this.onclose?.()
    }

    close(): void {
        this.closed = true
        this.onclose?.()
    }
}

/** fetch stub driven by a route table: "POST /api/threshold" -> response */
export function fakeFetch(
    routes: Record<string, { status?: number; body?: unknown }>,
    calls: Array<{ url: string; init?: RequestInit }>,
) {
    return async (url: string, init?: RequestInit): Promise<Response> => {
        calls.push({ url, init })
        const key = `${init?.method ?? "GET"} ${url.split("?")[0]}`
        const route = routes[key]
        if (!route) {
            return new Response(JSON.stringify({ detail: `no route ${key}` }), {
                status: 404,
            })
        }
        return new Response(JSON.stringify(route.body ?? { ok: true }), {
            status: route.status ?? 200,
            headers: { "Content-Type": "application/json" },
        })
    }
}
