#!/usr/bin/env python3
"""Regenerates the scripted transcripts and suite manifest from the fixtures.

    python3 data/suite/generate.py

Programs carry `# stub:` directives so the canned test runner can replay
them; a real Python runner treats those lines as comments.
"""
import json
import pathlib

ROOT = pathlib.Path(__file__).resolve().parents[2]
FIX = ROOT / "tests" / "fixtures" / "directed_movie_count"
WORLD = ROOT / "data" / "tmdb_world.json"
OUT = ROOT / "data" / "suite"

SEARCH = "/3/search/person"
CREDITS = "/3/person/{person_id}/movie_credits"
INVENTED = "/3/person/{person_id}/directed_movies"

# scenario index -> kind
NEEDS_REVIEW = {2, 5, 8}
NEEDS_REFORMULATION = {9}


def fenced(text):
    return "```python\n" + text.rstrip("\n") + "\n```\n"


def people():
    world = json.loads(WORLD.read_text())
    found = []
    ids = {}
    for r in world["routes"]:
        if r["path_template"] == SEARCH:
            name = r["params"]["query"]
            ids[name] = r["body"]["results"][0]["id"]
            found.append(name)
    counts = {}
    for r in world["routes"]:
        if r["path_template"] == CREDITS:
            pid = int(r["params"]["person_id"])
            counts[pid] = sum(1 for c in r["body"]["crew"] if c["job"] == "Director")
    return [(n, ids[n], counts[ids[n]]) for n in found]


def with_name(text, name):
    return text.replace("Sofia Coppola", name)


def directives(name, pid):
    q = name.replace(" ", "%20")
    return (
        "\n# stub: get " + SEARCH + "?query=" + q + "\n"
        "# stub: count /3/person/" + str(pid) + "/movie_credits crew job=Director "
        "Number of movies directed by " + name + ":\n"
    )


def buggy(program, name, pid):
    broken = program.replace('movie_credits_response["crew"]', 'movie_credits_response["credits"]')
    lines = broken.split("\n")
    bad = next(i for i, l in enumerate(lines, 1) if '["credits"]' in l)
    call = next(i for i, l in enumerate(lines, 1) if "= get_directed_movie_count(" in l)
    q = name.replace(" ", "%20")
    return broken.rstrip("\n") + (
        "\n\n# stub: get " + SEARCH + "?query=" + q + "\n"
        "# stub: get /3/person/" + str(pid) + "/movie_credits\n"
        "# stub: frame <module> " + str(call) + "\n"
        "# stub: frame get_directed_movie_count " + str(bad) + "\n"
        "# stub: raise KeyError 'credits'\n"
    )


def transcript(index, name, pid):
    scaffold = with_name((FIX / "scaffold.py").read_text(), name)
    plan = with_name((FIX / "plan_response.py").read_text(), name)
    pseudo = with_name((FIX / "pseudo.py").read_text(), name)
    program = with_name((FIX / "program.py").read_text(), name)
    good = program.rstrip("\n") + "\n" + directives(name, pid)
    entries = [
        {"stage": "t2c", "must_contain": [name], "response": fenced(scaffold)},
        {"stage": "plan", "must_contain": ["get_directed_movie_count"], "response": fenced(plan)},
    ]
    if index in NEEDS_REFORMULATION:
        entries.append({"stage": "select", "must_contain": ["# Step 1."],
                        "response": fenced(pseudo.replace(CREDITS, INVENTED))})
        entries.append({"stage": "reformulate", "must_contain": [INVENTED], "response": fenced(pseudo)})
    else:
        entries.append({"stage": "select", "must_contain": ["# Step 1."], "response": fenced(pseudo)})
    if index in NEEDS_REVIEW:
        entries.append({"stage": "codegen", "must_contain": [SEARCH], "response": fenced(buggy(program, name, pid))})
        entries.append({"stage": "review", "must_contain": ["KeyError"], "response": fenced(good)})
    else:
        entries.append({"stage": "codegen", "must_contain": [SEARCH], "response": fenced(good)})
    return {"format_version": 1, "entries": entries}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    scenarios = []
    for index, (name, pid, count) in enumerate(people()):
        slug = name.lower().replace(" ", "_")
        (OUT / (slug + ".json")).write_text(json.dumps(transcript(index, name, pid), indent=2) + "\n")
        scenarios.append({
            "task": {
                "id": "directed-" + slug,
                "query": "give me the number of movies directed by " + name,
                "ground_truth_tools": [SEARCH, CREDITS],
                "ground_truth_answer": str(count),
            },
            "transcript": slug + ".json",
            "fixture": "../tmdb_world.json",
            "ground_truth_calls": [
                {"path": SEARCH, "required_params": {"query": name}},
                {"path": CREDITS, "required_params": {"person_id": str(pid)}},
            ],
        })
    manifest = {"trailing_number": True, "scenarios": scenarios}
    (OUT / "suite.json").write_text(json.dumps(manifest, indent=2) + "\n")
    sofia = transcript(-1, "Sofia Coppola", 1769)
    (ROOT / "data" / "sofia_transcript.json").write_text(json.dumps(sofia, indent=2) + "\n")


if __name__ == "__main__":
    main()
