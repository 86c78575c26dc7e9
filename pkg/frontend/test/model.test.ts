import { describe, expect, it } from "vitest"

import { ViewModel } from "../src/model.js"
import type { StreamEvent } from "../src/types.js"
import { decisionEvent, defaultSnapshot } from "./helpers.js"

describe("ViewModel", () => {
    it("initializes from a snapshot", () => {
        const vm = new ViewModel()
        vm.initFromSnapshot(defaultSnapshot())
        expect(vm.topology.nodes).toHaveLength(26)
        expect(vm.thresholds.cooler).toBe(0.8)
        expect(vm.sensorModes.PS1).toBe("Active")
        expect(vm.replay.state).toBe("idle")
    })

    it("appends one point per task per decision", () => {
        const vm = new ViewModel()
        vm.initFromSnapshot(defaultSnapshot())
        for (let c = 0; c < 10; c++) {
            expect(vm.applyEvent(decisionEvent(c))).toBe("series")
        }
        expect(vm.taskSeries("cooler")).toHaveLength(10)
        expect(vm.taskSeries("valve")).toHaveLength(10)
        expect(vm.taskSeries("cooler").map((p) => p.cycle)).toEqual(
            [...Array(10).keys()],
        )
    })

    it("stores the server verdict verbatim, never recomputes it", () => {
        const vm = new ViewModel()
        vm.initFromSnapshot(defaultSnapshot())
        // Server says "uncertain" even though certainty exceeds the slider
        // threshold the client knows about; the client must not second-guess.
        const event = decisionEvent(0, 0.95)
        const entries = event.payload.entries as Record<string, any>
        entries.cooler.verdict = "uncertain"
        vm.applyEvent(event)
        expect(vm.taskSeries("cooler")[0].verdict).toBe("uncertain")
    })

    it("bounds each ring buffer at its capacity", () => {
        const vm = new ViewModel(25)
        vm.initFromSnapshot(defaultSnapshot())
        for (let c = 0; c < 80; c++) vm.applyEvent(decisionEvent(c))
        const points = vm.taskSeries("cooler")
        expect(points).toHaveLength(25)
        expect(points[0].cycle).toBe(55) // oldest dropped
        expect(points[24].cycle).toBe(79)
    })

    it("replaces topology on topology_change events", () => {
        const vm = new ViewModel()
        vm.initFromSnapshot(defaultSnapshot())
        const event: StreamEvent = {
            kind: "topology_change",
            payload: {
                change: "remove",
                agent: "PS1",
                nodes: vm.topology.nodes.filter((n) => n.name !== "PS1"),
                edges: vm.topology.edges.filter(([p]) => p !== "PS1"),
            },
            cycle_index: null,
            timestamp_ms: null,
        }
        expect(vm.applyEvent(event)).toBe("topology")
        expect(vm.topology.nodes).toHaveLength(25)
    })

    it("tracks training progress per task", () => {
        const vm = new ViewModel()
        vm.initFromSnapshot(defaultSnapshot())
        const changed = vm.applyEvent({
            kind: "training_progress",
            payload: { task: "valve", job_id: "j1", state: "running", epoch: 3, epochs: 10 },
            cycle_index: null,
            timestamp_ms: null,
        })
        expect(changed).toBe("training")
        expect(vm.training.get("valve")?.epoch).toBe(3)
    })

    it("is fully reconstructible from snapshot + replayed events", () => {
        const events = [...Array(12).keys()].map((c) => decisionEvent(c, 0.7 + c * 0.02))

        const live = new ViewModel()
        live.initFromSnapshot(defaultSnapshot())
        for (const e of events) live.applyEvent(e)

        const rebuilt = new ViewModel()
        rebuilt.initFromSnapshot(defaultSnapshot())
        for (const e of events) rebuilt.applyEvent(e)

        expect(rebuilt.taskSeries("cooler")).toEqual(live.taskSeries("cooler"))
        expect(rebuilt.topology).toEqual(live.topology)
        expect(rebuilt.thresholds).toEqual(live.thresholds)
    })

    it("ignores unknown event kinds", () => {
        const vm = new ViewModel()
        vm.initFromSnapshot(defaultSnapshot())
        expect(
            vm.applyEvent({
                kind: "sensor_sample",
                payload: { channel: "PS1", mean: 160 },
                cycle_index: 0,
                timestamp_ms: 0,
            }),
        ).toBe("none")
    })
})
