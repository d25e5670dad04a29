#!/usr/bin/env python3
"""Regenerates the demo failure-mode dataset under data/demo/.

Twelve systems in three categories, a handful of records per system, and a
random propagation edge list. The six exemplar rows at the top are quoted
from the published coding-scheme table; everything else is synthetic.
"""
import csv
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "data" / "demo"

EXEMPLARS = [
    ("11010101", "Target and Obstacle Perception System", "Sonar System", "Array Transducer",
     "Physical Damage to Array Transducer", "Structural damage due to collision",
     "The requirements in the collision avoidance specification cannot be properly implemented. Because these autonomous ships have specific relevant collision avoidance specifications for unmanned ships during navigation and are more stringent, if there are performance hazards in the sonar system, the mission will be directly interrupted or the navigation will be terminated.",
     "Inspect the transducer for physical damage to determine if it can be repaired or needs to be replaced. If the damage is severe, replace the entire Array Transducer or the damaged part directly."),
    ("11010102", "Target and Obstacle Perception System", "Sonar System", "Array Transducer",
     "Array Transducer Wiring Breakage", "Collisions cause lines to break or break",
     "The sonar system will completely lose its target detection ability or have a certain blind spot for target recognition, and cannot transmit and receive acoustic signals and convert them into effective information, so that obstacle detection and local operations will lose the modal signal support.",
     "Use test equipment to determine the location of the line break. If it is a simple broken wire, it can be repaired by welding or using a terminal cap; if the line is severely damaged, the entire line needs to be replaced."),
    ("21010601", "Ship-to-Shore Communication System", "Shipboard Server", "Server Motherboard",
     "Server motherboard short-circuit or open circuit", "Physical damage, vibration-induced solder joint breakage",
     "The system is completely paralyzed and cannot be recovered",
     "Inspect and repair or replace the motherboard to ensure that the solder joints are secure and vibration effects are reduced, and system testing is performed to verify start-up and stability."),
    ("21010701", "Ship-to-Shore Communication System", "Shipboard Server", "Server Memory",
     "Server memory (RAM) data error or loss", "Physical shock, loose or damaged memory modules",
     "Data loss, performance degradation",
     "Check and fix or replace memory modules, run memory test programs, and ensure that data is read and written correctly, preventing data errors or loss."),
    ("31010101", "Intelligent Navigation Control System", "Real-time Controller", "Universal Serial Bus (USB)",
     "Interruption or delay of data transmission of Universal Serial Bus (USB)", "Physical damage to the circuit, connector breakage, vibration",
     "The ship is unable to adjust its route in time, increasing the risk of secondary collisions.",
     "The intelligent navigation control system initiates autonomous diagnosis, uses internal sensors to locate the damage point, dispatches unmanned maintenance robots through the autonomous navigation system for precise repair, and records the maintenance situation in the system log to ensure safety before the next voyage."),
    ("31010102", "Intelligent Navigation Control System", "Real-time Controller", "Universal Serial Bus (USB)",
     "Error or loss of data packets of Universal Serial Bus (USB)", "The communication protocol is confused, the data verification fails",
     "This can lead to the ship not responding to orders correctly, increasing the risk of accidents",
     "The system automatically executes the protocol self-healing procedure, analyzes data transmission errors through AI algorithms, intelligently adjusts communication parameters, monitors and optimizes the data verification mechanism in real time, and reduces the probability of transmission errors."),
]

# category digit, system digit, name, subsystems -> components, domain words
SYSTEMS = [
    (1, 1, "Target and Obstacle Perception System",
     {"Sonar System": ["Array Transducer", "Signal Processor"], "Radar Unit": ["Radar Antenna", "Echo Receiver"]},
     "obstacle detection target echo acoustic range blind"),
    (1, 2, "Positioning System",
     {"Satellite Receiver": ["GPS Antenna", "Receiver Board"], "Inertial Unit": ["Gyroscope", "Accelerometer"]},
     "position drift fix satellite heading coordinate"),
    (1, 3, "Side Propulsion System",
     {"Bow Thruster": ["Thruster Motor", "Propeller Blade"], "Thruster Drive": ["Frequency Converter", "Drive Shaft"]},
     "thrust berthing lateral motor rotation torque"),
    (1, 4, "Power System",
     {"Main Engine": ["Fuel Injector", "Turbocharger"], "Generator Set": ["Alternator", "Voltage Regulator"]},
     "power engine fuel voltage load blackout"),
    (1, 5, "Navigational Aid System",
     {"Electronic Chart": ["Chart Display", "Chart Database"], "Automatic Identification": ["AIS Transponder", "VHF Antenna"]},
     "chart route identification display beacon track"),
    (2, 1, "Ship-to-Shore Communication System",
     {"Shipboard Server": ["Server Motherboard", "Server Memory"], "Satellite Link": ["Link Modem", "Link Antenna"]},
     "link data server bandwidth packet latency"),
    (2, 2, "Shore-based Dispatch Communication System",
     {"Dispatch Console": ["Operator Terminal", "Dispatch Software"], "Radio Relay": ["Relay Transmitter", "Relay Power Supply"]},
     "dispatch schedule operator relay instruction queue"),
    (2, 3, "Shore-based Meteorological Service System",
     {"Weather Station": ["Wind Sensor", "Pressure Sensor"], "Forecast Server": ["Forecast Model", "Forecast Database"]},
     "weather wind forecast wave storm visibility"),
    (2, 4, "Shore-based Remote Control Center",
     {"Remote Console": ["Joystick Controller", "Video Wall"], "Control Network": ["Core Switch", "Firewall"]},
     "remote operator takeover video control command"),
    (3, 1, "Intelligent Navigation Control System",
     {"Real-time Controller": ["Universal Serial Bus (USB)", "Control Processor"], "Path Planner": ["Planning Module", "Collision Predictor"]},
     "route planning autonomous collision decision trajectory"),
    (3, 2, "Intelligent Energy Storage System",
     {"Battery Pack": ["Battery Cell", "Battery Management Unit"], "Charging Unit": ["Charger Module", "Charging Connector"]},
     "battery charge thermal cell energy capacity"),
    (3, 3, "Intelligent Cargo Hold System",
     {"Hold Monitoring": ["Temperature Sensor", "Gas Detector"], "Lashing Control": ["Lashing Actuator", "Container Lock"]},
     "cargo hold container lashing temperature gas"),
]

FAULTS = ["Physical damage", "Wiring breakage", "Intermittent signal loss", "Overheating", "Calibration drift",
          "Power supply failure", "Firmware fault", "Corrosion"]
REASONS = ["collision impact", "vibration fatigue", "salt spray corrosion", "aging insulation",
           "software defect", "moisture ingress", "overload", "manufacturing defect"]
EFFECTS = ["the {sys} loses {w1} capability and the voyage must be slowed",
           "degraded {w1} and {w2} performance increases collision risk",
           "the {sub} stops reporting {w1} data to the control center",
           "{w2} information becomes unreliable and the ship relies on backup {w1} functions"]
MEASURES = ["inspect the {comp} and replace it if the damage is severe",
            "isolate the {sub}, switch to the redundant unit and dispatch a repair crew",
            "restart the {sub}, monitor {w1} output and record the fault in the log",
            "test the {comp} wiring, repair or weld broken joints and adjust the settings"]


def synth_records(rng):
    rows = []
    for cat, sysno, name, subs, words in SYSTEMS:
        vocab = words.split()
        for s_idx, (sub, comps) in enumerate(subs.items(), start=1):
            for c_idx, comp in enumerate(comps, start=1):
                for m_idx in range(1, 4):
                    rid = f"{cat}{sysno}{s_idx:02d}{c_idx:02d}{m_idx:02d}"
                    w1, w2 = rng.sample(vocab, 2)
                    fault = rng.choice(FAULTS)
                    rows.append((
                        rid, name, sub, comp,
                        f"{fault} of {comp}",
                        f"{rng.choice(REASONS)} causing {w1} {rng.choice(['faults', 'errors', 'loss'])}",
                        rng.choice(EFFECTS).format(sys=name.lower(), sub=sub.lower(), w1=w1, w2=w2),
                        rng.choice(MEASURES).format(comp=comp.lower(), sub=sub.lower(), w1=w1),
                    ))
    return rows


def main():
    rng = random.Random(4)
    exemplar_ids = {r[0] for r in EXEMPLARS}
    rows = list(EXEMPLARS) + [r for r in synth_records(rng) if r[0] not in exemplar_ids]
    rows.sort(key=lambda r: r[0])
    OUT.mkdir(parents=True, exist_ok=True)
    header = ["id", "system", "subsystem", "component", "failure_mode", "failure_reason", "failure_effect",
              "emergency_measure"]
    with open(OUT / "records.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)

    # propagation edges: dense inside a system, sparse across systems
    ids = [r[0] for r in rows]
    by_sys = {}
    for i in ids:
        by_sys.setdefault(i[:2], []).append(i)
    edges = {}
    for members in by_sys.values():
        for _ in range(len(members) * 2):
            a, b = rng.sample(members, 2)
            edges[(a, b)] = round(rng.uniform(0.3, 1.0), 3)
    for _ in range(len(ids) // 2):
        a, b = rng.sample(ids, 2)
        if a[:2] != b[:2]:
            edges[(a, b)] = round(rng.uniform(0.05, 0.4), 3)
    with open(OUT / "edges.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["src", "dst", "weight"])
        for (a, b), wt in sorted(edges.items()):
            w.writerow([a, b, wt])

    (OUT / "verbs.txt").write_text(
        "inspect\nreplace\nrepair\nswitch\nrestart\nmonitor\nisolate\ntest\nweld\nadjust\nrecord\ndispatch\n")


if __name__ == "__main__":
    main()
