// Wire formats of the control service (GET /api/snapshot, WS /api/stream).

export interface NodeInfo {
    name: string
    role: string
    state: string
}

export interface TopologySnapshot {
    nodes: NodeInfo[]
    edges: [string, string][]
}

export interface ReplayState {
    state: string
    position: number
    speed: number
}

export interface SensorModeInfo {
    mode: string
    noise_sigma: number | null
}

export interface Snapshot {
    topology: TopologySnapshot
    replay: ReplayState
    thresholds: Record<string, number>
    sensor_modes: Record<string, SensorModeInfo>
    deployed_tasks: string[]
}

export type Verdict = "certain" | "uncertain"

export interface DecisionEntry {
    modal_class: number
    class_label: number
    certainty: number
    verdict: Verdict
    threshold: number
}

export interface StreamEvent {
    kind: string
    payload: Record<string, unknown>
    cycle_index: number | null
    timestamp_ms: number | null
}

export const TASKS = [
    "cooler",
    "valve",
    "pump_leak",
    "accumulator",
    "stable_flag",
] as const

export type TaskName = (typeof TASKS)[number]

export const SENSOR_MODES = ["Active", "Passive", "Zeroed", "Off"] as const
