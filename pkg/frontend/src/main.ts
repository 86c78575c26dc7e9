// Dashboard bootstrap: one snapshot seeds the view model, then stream
// events keep it moving. A dropped socket reconnects with backoff and the
// whole view state is rebuilt from a fresh snapshot (nothing persists
// client-side).

import { ApiClient, StreamSocket } from "./api.js"
import { drawSeries } from "./chart.js"
import { ControlPanel } from "./controls.js"
import { renderTopology } from "./graph.js"
import { ViewModel } from "./model.js"
import { TASKS } from "./types.js"

export interface DashboardHandles {
    vm: ViewModel
    refresh: () => Promise<void>
    selectTask: (task: string) => void
    stop: () => void
}

// Only what the panels render; subscribing to the raw sensor feed would
// just stress the stream buffer.
export const STREAM_KINDS = "decision,topology_change,training_progress"

export function streamUrlFor(base: string): string {
    return `${base}?kinds=${STREAM_KINDS}`
}

export function startDashboard(
    root: HTMLElement,
    api: ApiClient,
    streamUrl: string,
    socketFactory?: ConstructorParameters<typeof StreamSocket>[1]["socketFactory"],
): DashboardHandles {
    const vm = new ViewModel()
    let selectedTask: string = TASKS[0]

    root.innerHTML = `
      <header>
        <h1>Hydraulic rig condition monitor</h1>
        <div id="conn-banner" class="banner" hidden>reconnecting...</div>
      </header>
      <main>
        <section class="panel" id="graph-panel">
          <h2>Agent network</h2>
          <svg id="topology"></svg>
        </section>
        <section class="panel" id="chart-panel">
          <h2>Predictions
            <select id="task-select"></select>
          </h2>
          <svg id="series"></svg>
        </section>
        <section class="panel" id="control-panel-host">
          <h2>Controls</h2>
        </section>
      </main>`

    const topologySvg = root.querySelector<SVGSVGElement>("#topology")!
    const seriesSvg = root.querySelector<SVGSVGElement>("#series")!
    const banner = root.querySelector<HTMLElement>("#conn-banner")!
    const taskSelect = root.querySelector<HTMLSelectElement>("#task-select")!
    for (const task of TASKS) {
        const option = document.createElement("option")
        option.value = task
        option.textContent = task
        taskSelect.appendChild(option)
    }
    taskSelect.addEventListener("change", () => {
        selectedTask = taskSelect.value
        redrawSeries()
    })

    const panel = new ControlPanel(api, vm, {
        onServerChange: async () => {
            // Mirror-of-server rule: re-fetch, then re-render everything the
            // control may have changed.
            vm_initFromServer()
        },
    })
    root.querySelector("#control-panel-host")!.appendChild(panel.root)

    function redrawTopology(): void {
        renderTopology(topologySvg, vm.topology)
    }

    function redrawSeries(): void {
        const threshold = vm.thresholds[selectedTask] ?? 0.8
        drawSeries(seriesSvg, vm.taskSeries(selectedTask), threshold)
    }

    async function vm_initFromServer(): Promise<void> {
        const snap = await api.snapshot()
        const series = vm.series // controls must not wipe the plot history
        vm.initFromSnapshot(snap)
        vm.series = series
        redrawTopology()
        redrawSeries()
        panel.render()
    }

    async function fullRefresh(): Promise<void> {
        const snap = await api.snapshot()
        vm.initFromSnapshot(snap)
        redrawTopology()
        redrawSeries()
        panel.render()
    }

    const socket = new StreamSocket(streamUrl, {
        socketFactory,
        onEvent: (event) => {
            const changed = vm.applyEvent(event)
            if (changed === "topology") redrawTopology()
            else if (changed === "series") redrawSeries()
            else if (changed === "training") panel.render()
        },
        onStatus: (status) => {
            banner.hidden = status === "open"
        },
        onReconnect: () => {
            // State is rebuilt from a fresh snapshot after every reconnect.
            void fullRefresh()
        },
    })

    void fullRefresh().then(() => socket.start())

    return {
        vm,
        refresh: fullRefresh,
        selectTask: (task: string) => {
            selectedTask = task
            taskSelect.value = task
            redrawSeries()
        },
        stop: () => socket.stop(),
    }
}

declare global {
    interface Window {
        __uamasDashboard?: DashboardHandles
    }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
    const api = new ApiClient("")
    const proto = location.protocol === "https:" ? "wss" : "ws"
    const url = streamUrlFor(`${proto}://${location.host}/api/stream`)
    window.__uamasDashboard = startDashboard(
        document.getElementById("app")!,
        api,
        url,
    )
}
