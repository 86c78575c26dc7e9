// Operator controls: threshold sliders, sensor mode toggles, replay and
// retrain buttons. Controls disable while their POST is in flight and
// mirror server state only after the ack (never optimistically render).

import { ApiClient, ApiError } from "./api.js"
import type { ViewModel } from "./model.js"
import { SENSOR_MODES, TASKS } from "./types.js"

export interface ControlPanelOptions {
    onServerChange: () => Promise<void> | void
}

export class ControlPanel {
    readonly root: HTMLElement
    private api: ApiClient
    private vm: ViewModel
    private options: ControlPanelOptions
    private errorBox: HTMLElement

    constructor(api: ApiClient, vm: ViewModel, options: ControlPanelOptions) {
        this.api = api
        this.vm = vm
        this.options = options
        this.root = document.createElement("div")
        this.root.className = "control-panel"
        this.errorBox = document.createElement("div")
        this.errorBox.className = "control-error"
        this.errorBox.setAttribute("role", "alert")
    }

    render(): void {
        this.root.innerHTML = ""
        this.root.appendChild(this.errorBox)
        this.root.appendChild(this.renderReplay())
        this.root.appendChild(this.renderThresholds())
        this.root.appendChild(this.renderSensors())
        this.root.appendChild(this.renderTraining())
    }

    private async guard(control: HTMLButtonElement | HTMLInputElement | HTMLSelectElement,
                        action: () => Promise<unknown>): Promise<void> {
        control.disabled = true
        this.errorBox.textContent = ""
        try {
            await action()
            await this.options.onServerChange()
        } catch (err) {
            this.errorBox.textContent =
                err instanceof ApiError ? `${err.status}: ${err.message}` : String(err)
        } finally {
            control.disabled = false
        }
    }

    private renderThresholds(): HTMLElement {
        const section = document.createElement("section")
        section.className = "thresholds"
        section.innerHTML = "<h3>Certainty thresholds</h3>"
        for (const task of TASKS) {
            const row = document.createElement("label")
            row.className = "threshold-row"
            row.setAttribute("data-task", task)
            const value = this.vm.thresholds[task] ?? 0.8
            const name = document.createElement("span")
            name.textContent = task
            const slider = document.createElement("input")
            slider.type = "range"
            slider.min = "0"
            slider.max = "1"
            slider.step = "0.01"
            slider.value = String(value)
            slider.setAttribute("data-control", `threshold-${task}`)
            const readout = document.createElement("output")
            readout.textContent = value.toFixed(2)
            slider.addEventListener("change", () => {
                void this.guard(slider, () =>
                    this.api.setThreshold(task, Number(slider.value)),
                )
            })
            row.append(name, slider, readout)
            section.appendChild(row)
        }
        return section
    }

    private renderSensors(): HTMLElement {
        const section = document.createElement("section")
        section.className = "sensors"
        section.innerHTML = "<h3>Sensors</h3>"
        const grid = document.createElement("div")
        grid.className = "sensor-grid"
        const channels = Object.keys(this.vm.sensorModes).sort()
        for (const channel of channels) {
            const cell = document.createElement("label")
            cell.className = "sensor-cell"
            cell.setAttribute("data-channel", channel)
            const name = document.createElement("span")
            name.textContent = channel
            const select = document.createElement("select")
            select.setAttribute("data-control", `sensor-${channel}`)
            for (const mode of SENSOR_MODES) {
                const option = document.createElement("option")
                option.value = mode
                option.textContent = mode
                if (mode === this.vm.sensorModes[channel]) option.selected = true
                select.appendChild(option)
            }
            select.addEventListener("change", () => {
                void this.guard(select, () =>
                    this.api.setSensorMode(channel, select.value),
                )
            })
            cell.append(name, select)
            grid.appendChild(cell)
        }
        section.appendChild(grid)
        return section
    }

    private renderReplay(): HTMLElement {
        const section = document.createElement("section")
        section.className = "replay"
        section.innerHTML = "<h3>Replay</h3>"
        const state = document.createElement("span")
        state.className = "replay-state"
        state.textContent = `${this.vm.replay.state} @ ${this.vm.replay.speed}x ` +
            `(cycle ${this.vm.replay.position})`
        section.appendChild(state)
        for (const action of ["start", "pause", "resume", "stop"]) {
            const button = document.createElement("button")
            button.textContent = action
            button.setAttribute("data-control", `replay-${action}`)
            button.addEventListener("click", () => {
                void this.guard(button, () => this.api.replay(action))
            })
            section.appendChild(button)
        }
        const speed = document.createElement("input")
        speed.type = "number"
        speed.min = "1"
        speed.value = String(this.vm.replay.speed)
        speed.setAttribute("data-control", "replay-speed")
        speed.addEventListener("change", () => {
            void this.guard(speed, () =>
                this.api.replay("set_speed", { speed: Number(speed.value) }),
            )
        })
        section.appendChild(speed)
        return section
    }

    private renderTraining(): HTMLElement {
        const section = document.createElement("section")
        section.className = "training"
        section.innerHTML = "<h3>Retrain</h3>"
        for (const task of TASKS) {
            const row = document.createElement("div")
            row.className = "training-row"
            row.setAttribute("data-task", task)
            const button = document.createElement("button")
            button.textContent = `retrain ${task}`
            button.setAttribute("data-control", `train-${task}`)
            button.addEventListener("click", () => {
                void this.guard(button, () => this.api.train(task))
            })
            const status = document.createElement("span")
            status.className = "training-status"
            const info = this.vm.training.get(task)
            if (info) {
                status.textContent = info.epoch
                    ? `${info.state} ${info.epoch}/${info.epochs}`
                    : info.state
            }
            row.append(button, status)
            section.appendChild(row)
        }
        return section
    }

    get errorText(): string {
        return this.errorBox.textContent ?? ""
    }
}
