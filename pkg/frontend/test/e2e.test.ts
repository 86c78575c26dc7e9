// End-to-end: boots the real backend (replay-demo) and drives the real
// dashboard DOM against its HTTP API and event stream.

import { execFileSync, spawn, type ChildProcess } from "node:child_process"
import { mkdtempSync, rmSync } from "node:fs"
import { createServer } from "node:net"
import { tmpdir } from "node:os"
import { join } from "node:path"
import { WebSocket as NodeWebSocket } from "ws"
import { afterAll, beforeAll, describe, expect, it } from "vitest"

import { ApiClient, type SocketLike } from "../src/api.js"
import { startDashboard, streamUrlFor, type DashboardHandles } from "../src/main.js"

const PYTHON = process.env.UAMAS_PYTHON ?? "python3"

function freePort(): Promise<number> {
    return new Promise((resolve, reject) => {
        const server = createServer()
        server.listen(0, "127.0.0.1", () => {
            const address = server.address()
            if (address && typeof address === "object") {
                const port = address.port
                server.close(() => resolve(port))
            } else {
                reject(new Error("no port"))
            }
        })
    })
}

async function waitFor(
    predicate: () => boolean | Promise<boolean>,
    timeoutMs: number,
    label: string,
): Promise<void> {
    const deadline = Date.now() + timeoutMs
    while (Date.now() < deadline) {
        if (await predicate()) return
        await new Promise((resolve) => setTimeout(resolve, 100))
    }
    throw new Error(`timeout waiting for ${label}`)
}

describe("dashboard against a live replay-demo", () => {
    let workdir: string
    let proc: ChildProcess | null = null
    let base: string
    let handles: DashboardHandles
    let root: HTMLElement
    const logs: string[] = []

    beforeAll(async () => {
        workdir = mkdtempSync(join(tmpdir(), "uamas-e2e-"))
        const dataDir = join(workdir, "data")
        execFileSync(
            PYTHON,
            ["-m", "uamas.cli", "make-data", "--out", dataDir, "--cycles", "60", "--seed", "3"],
            { stdio: "pipe" },
        )
        const port = await freePort()
        base = `http://127.0.0.1:${port}`
        proc = spawn(
            PYTHON,
            [
                "-m", "uamas.cli", "replay-demo",
                "--dataset-root", dataDir,
                "--models-dir", join(workdir, "models"),
                "--port", String(port),
                "--speed", "120",
                "--loop",
                "--train-first",
            ],
            {
                env: {
                    ...process.env,
                    UMAS_EPOCHS: "1",
                    UMAS_MC_SAMPLES: "10",
                    UMAS_THRESHOLD: "0.99",
                },
                stdio: ["ignore", "pipe", "pipe"],
            },
        )
        proc.stdout?.on("data", (d) => logs.push(String(d)))
        proc.stderr?.on("data", (d) => logs.push(String(d)))
        await waitFor(
            async () => {
                try {
                    const r = await fetch(`${base}/api/topology`)
                    return r.ok
                } catch {
                    return false
                }
            },
            110_000,
            `backend at ${base} (logs: ${logs.slice(-3).join(" | ")})`,
        )

        root = document.createElement("div")
        document.body.appendChild(root)
        const socketFactory = (url: string): SocketLike =>
            new NodeWebSocket(url) as unknown as SocketLike
        handles = startDashboard(
            root,
            new ApiClient(base),
            streamUrlFor(`ws://127.0.0.1:${port}/api/stream`),
            socketFactory,
        )
    })

    afterAll(async () => {
        handles?.stop()
        if (proc && proc.exitCode === null) {
            proc.kill("SIGINT")
            await new Promise((resolve) => {
                proc!.once("exit", resolve)
                setTimeout(resolve, 10_000)
            })
        }
        rmSync(workdir, { recursive: true, force: true })
    })

    it("renders the 25 visible agents", async () => {
        await waitFor(
            () => root.querySelectorAll("g.node").length === 25,
            15_000,
            "25 agent nodes",
        )
        expect(root.querySelectorAll("g.node")).toHaveLength(25)
        expect(root.querySelector('g[data-name="ui"]')).toBeNull()
    })

    it("plots at least 10 decision points within 15 seconds", async () => {
        await waitFor(
            () => root.querySelectorAll("#series circle.point").length >= 10,
            15_000,
            "10 decision points",
        )
        expect(
            root.querySelectorAll("#series circle.point").length,
        ).toBeGreaterThanOrEqual(10)
    })

    it("re-colors subsequent verdicts after a threshold change", async () => {
        // Drive the real slider: threshold 0 makes every later verdict
        // "certain" (certainty >= 0 always, inclusive rule).
        const slider = root.querySelector<HTMLInputElement>(
            '[data-control="threshold-cooler"]',
        )!
        slider.value = "0"
        slider.dispatchEvent(new Event("change", { bubbles: true }))
        await waitFor(
            () =>
                root
                    .querySelector("#series line.threshold-line")
                    ?.getAttribute("data-threshold") === "0",
            15_000,
            "threshold line to move after ack",
        )
        const cyclesSeen = () =>
            Array.from(root.querySelectorAll("#series circle.point")).map((c) =>
                Number(c.getAttribute("data-cycle")),
            )
        await waitFor(() => cyclesSeen().length > 0, 15_000, "a plotted point")
        const changeCycle = Math.max(...cyclesSeen())
        await waitFor(
            () => {
                const cycles = cyclesSeen()
                return cycles.length > 0 && Math.max(...cycles) >= changeCycle + 5
            },
            20_000,
            "five more cycles after the threshold ack",
        )
        const after = Array.from(
            root.querySelectorAll("#series circle.point"),
        ).filter((c) => Number(c.getAttribute("data-cycle")) > changeCycle + 1)
        expect(after.length).toBeGreaterThan(0)
        for (const dot of after) {
            expect(dot.getAttribute("class")).toContain("verdict-certain")
        }
    })

    it("restyles a sensor node after a mode toggle", async () => {
        const select = root.querySelector<HTMLSelectElement>(
            '[data-control="sensor-PS1"]',
        )!
        select.value = "Off"
        select.dispatchEvent(new Event("change", { bubbles: true }))
        await waitFor(
            () =>
                root
                    .querySelector('g[data-name="PS1"]')
                    ?.getAttribute("class")
                    ?.includes("state-off") ?? false,
            15_000,
            "PS1 node restyled to Off",
        )
        expect(
            root.querySelector('g[data-name="PS1"]')!.getAttribute("data-state"),
        ).toBe("Off")
    })
})
