// View model: everything the panels render, reconstructible at any time
// from one snapshot plus subsequent stream events. Verdicts are never
// computed here; the server's verdict strings are stored as-is.

import type {
    DecisionEntry,
    Snapshot,
    StreamEvent,
    TopologySnapshot,
    Verdict,
} from "./types.js"

export interface TaskPoint {
    cycle: number
    certainty: number
    verdict: Verdict
    classLabel: number
    threshold: number
}

export interface TrainingStatus {
    jobId: string
    state: string
    epoch?: number
    epochs?: number
    loss?: number
}

export type ChangedPart = "topology" | "series" | "training" | "none"

export class ViewModel {
    capacity: number
    topology: TopologySnapshot = { nodes: [], edges: [] }
    thresholds: Record<string, number> = {}
    sensorModes: Record<string, string> = {}
    replay = { state: "idle", position: 0, speed: 60 }
    deployedTasks: string[] = []
    series = new Map<string, TaskPoint[]>()
    training = new Map<string, TrainingStatus>()

    constructor(capacity = 600) {
        this.capacity = capacity
    }

    initFromSnapshot(snap: Snapshot): void {
        this.topology = snap.topology
        this.thresholds = { ...snap.thresholds }
        this.sensorModes = {}
        for (const [channel, info] of Object.entries(snap.sensor_modes)) {
            this.sensorModes[channel] = info.mode
        }
        this.replay = { ...snap.replay }
        this.deployedTasks = [...snap.deployed_tasks]
        // A fresh snapshot restarts the series: the trace log, not the UI,
        // is the durable record.
        this.series = new Map()
    }

    applyEvent(event: StreamEvent): ChangedPart {
        switch (event.kind) {
            case "decision":
                return this.applyDecision(event)
            case "topology_change": {
                const payload = event.payload as unknown as TopologySnapshot & {
                    change: string
                }
                this.topology = { nodes: payload.nodes, edges: payload.edges }
                return "topology"
            }
            case "training_progress": {
                const p = event.payload as Record<string, any>
                this.training.set(String(p.task), {
                    jobId: String(p.job_id),
                    state: String(p.state),
                    epoch: p.epoch,
                    epochs: p.epochs,
                    loss: p.loss,
                })
                return "training"
            }
            default:
                return "none"
        }
    }

    private applyDecision(event: StreamEvent): ChangedPart {
        const cycle = event.cycle_index
        if (cycle === null) return "none"
        const entries = (event.payload as { entries?: Record<string, DecisionEntry> })
            .entries
        if (!entries) return "none"
        for (const [task, entry] of Object.entries(entries)) {
            const points = this.series.get(task) ?? []
            points.push({
                cycle,
                certainty: entry.certainty,
                verdict: entry.verdict,
                classLabel: entry.class_label,
                threshold: entry.threshold,
            })
            if (points.length > this.capacity) {
                points.splice(0, points.length - this.capacity)
            }
            this.series.set(task, points)
        }
        return "series"
    }

    taskSeries(task: string): TaskPoint[] {
        return this.series.get(task) ?? []
    }
}
