"""The whole exchange, twice: once honest, once tampered.

A scenario document drives setup, the owner/provider agreement, store
ingest and two retrievals.  The honest run ends with the doctor seeing
every level and the nurse only the first two.  The tampered run shows
the provider refusing to co-sign when its reconstruction disagrees
with what the owner claimed, so nothing reaches the store at all.
"""

import json

from etenon import workflow

SCENARIO = {
    "suite": "mock",
    "seed": 23,
    "timestamp": 1_700_000_000,
    "participants": {
        "patient": {"role": "DO", "attrs": ["holder"]},
        "hospital": {"role": "SP", "attrs": ["basic", "doctor", "records"]},
        "dr_grey": {"role": "DU", "attrs": ["basic", "doctor", "records"]},
        "nurse_kim": {"role": "DU", "attrs": ["basic"]},
    },
    "policy": "\n".join([
        "level 1 requires [1]",
        "level 2 requires [1, 2]",
        "level 3 requires [1, 2, 3]",
        "tree: attr:basic, attr:doctor, attr:records",
    ]),
    "record": [
        {"name": "nino", "value": "QQ123456C"},
        {"name": "symptom", "value": "Pain in the chest and a cough"},
        {"name": "history", "value": "No known allergies"},
    ],
    "levels": {"1": ["symptom"], "2": ["history"]},
    "identifiable_level": 3,
    "do": "patient",
    "sp": "hospital",
    "retrieve": [{"du": "dr_grey"}, {"du": "nurse_kim"}],
}


def main():
    summary = workflow.run_scenario(SCENARIO)
    print("verdict:", summary["agreement"]["verdict"])
    print("signatures issued:", summary["agreement"]["signatures"])
    print("ingest accepted:", summary["ingest"]["accepted"])
    for r in summary["retrievals"]:
        print("%s recovered %d of %d levels:" % (
            r["du"], r["levels_recovered"], r["levels_in_ciphertext"]))
        for level in sorted(r["levels"], key=int):
            rec = r["levels"][level]
            shown = rec["text"] if rec["kind"] == "chain" else json.dumps(
                rec["identifiable"])
            print("  level %s (%s): %s" % (level, rec["kind"], shown))

    print()
    tampered = dict(SCENARIO, tamper="block_edit")
    summary = workflow.run_scenario(tampered)
    print("tampered verdict:", summary["agreement"]["verdict"])
    print("signatures issued:", summary["agreement"]["signatures"])
    print("anything stored:", summary["ingest"] is not None)


if __name__ == "__main__":
    main()
