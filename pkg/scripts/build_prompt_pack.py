"""One-off generator for src/vifactgen/data/prompt_pack.json."""

import json
from pathlib import Path

LABEL_DEFS = {
    "SUPPORTED": "SUPPORTED: is the information in the CLAIM sentence is correct based on the information in the EVIDENCE sentences.",
    "REFUTED": "REFUTED: is the information in the CLAIM sentence is incorrect based on the information in the EVIDENCE sentence.",
    "NEI": "NOT ENOUGH INFORMATION: is the information in the CLAIM sentence cannot be determined to be correct or incorrect based on the information in the EVIDENCE sentences.",
}

ROLE = "[ROLE] You are an expert in the field of natural language processing, especially in the task of fact-checking."

ALL_DEFS = (
    "The Fact-Checking problem includes 3 labels SUPPORTED, REFUTED, NOT ENOUGH INFORMATION defined as follows:\n"
    + LABEL_DEFS["SUPPORTED"]
    + "\n"
    + LABEL_DEFS["REFUTED"]
    + "\n"
    + LABEL_DEFS["NEI"]
)

TASK_PLAIN = {
    "SUPPORTED": "Your task is to create a CLAIM sentence with the SUPPORTED label in Vietnamese based on the information in EVIDENCE in the problem of fact-checking with the following instructions:",
    "REFUTED": "Your task is to create a CLAIM sentence with the REFUTED label in Vietnamese based on the information in EVIDENCE in the problem of fact-checking with the following instructions:",
    "NEI": "Your task is to create a CLAIM sentence with the NOT ENOUGH INFORMATION label in Vietnamese based on the information in EVIDENCE in the problem of fact-checking with the following instructions:",
}

TASK_GROUP = {
    "SUPPORTED": "Your task is to create a CLAIM sentence with the SUPPORTED label in Vietnamese based on a group of EVIDENCE sentences in the Fact-Checking problem with the following instructions:",
    "REFUTED": "Your task is to create a CLAIM sentence with the REFUTED label in Vietnamese based on a group of EVIDENCE sentences in the Fact-Checking problem with the following instructions:",
    "NEI": "Your task is to create a CLAIM sentence with the NOT ENOUGH INFORMATION label in Vietnamese based on a group of EVIDENCE sentences in the Fact-Checking problem with the following instructions:",
}

TASK_CALIB = {
    "REFUTED": "Your task is to create a CLAIM sentence with the REFUTED label in Vietnamese based on a SAMPLE CLAIM sentence with the SUPPORTED label, and a group of EVIDENCE sentences in the Fact-Checking problem with the following instructions:",
    "NEI": "Your task is to create a CLAIM sentence with the NOT ENOUGH INFORMATION label in Vietnamese based on a SAMPLE CLAIM sentence with the SUPPORTED label, a SAMPLE CLAIM sentence with the REFUTED label, and a group of EVIDENCE sentences in the Fact-Checking problem with the following instructions:",
}

RULES = {
    "SUPPORTED": [
        "The SUPPORTED label is the label determined when the information in the CLAIM sentence is created correctly with the information in EVIDENCE.",
        "You can infer new information but still have to ensure that the new information is correct and limited to the scope of information in EVIDENCE.",
        "[IMPORTANT NOTE] Do not copy exactly 1 sentence from the Evidence sentences.",
        "[IMPORTANT NOTE] No matter how many sentences there are in Evidence, you must combine the information in all the Evidence sentences provided when creating the Claim.",
        "[IMPORTANT NOTE] Just give me the Claim and nothing else.",
    ],
    "REFUTED": [
        "The REFUTED label is the label determined when the information in the CLAIM sentence is created FALSE, or contrary to the information in EVIDENCE.",
        "You can infer new information, but you must ensure that the new information is FALSE or contradictory and is limited to the information in EVIDENCE.",
        "[IMPORTANT NOTE] Do not copy the exact same sentence from the EVIDENCE statements.",
        "[IMPORTANT NOTE] You must combine the information in all the EVIDENCE statements provided when creating the CLAIM.",
        "[IMPORTANT NOTE] Show me the CLAIM and provide nothing else.",
    ],
    "NEI": [
        "The NOT ENOUGH INFORMATION label is the label determined when the information in the CLAIM sentence cannot be determined to be correct or incorrect based on the information in the EVIDENCE sentences.",
        "You can introduce new information or external details, as long as the EVIDENCE alone can neither confirm nor refute the CLAIM.",
        "[IMPORTANT NOTE] Do not copy the exact same sentence from the EVIDENCE statements.",
        "[IMPORTANT NOTE] You must combine the information in all the EVIDENCE statements provided when creating the CLAIM.",
        "[IMPORTANT NOTE] Show me the CLAIM and provide nothing else.",
    ],
}

EV_FILM = "The filmmakers began location scouting around April 2016; principal photography began on July 19 of that year and lasted four months until November 22. Wright and Hoeks's cut scene was one of the first scenes shot on set."
EV_KINGDOMS = "Although Romance of the Three Kingdoms contains some fictional historical details, in general, Chinese official histories also acknowledge that the Shu Han court had many commendable characters: the Shu Han king Liu Bei was originally from a humble background, and as a child he had to weave straw sandals to make a living, so he understood the suffering of the people very well. He built his empire from nothing with the loyal help of his generals, and when he ascended the throne, he implemented a policy of tolerance towards the people. Therefore, folk tales about the Three Kingdoms period tend to praise Liu Bei and the Shu Han dynasty, hating his enemies is inevitable, and the tendency to \"support Liu and oppose Cao Cao\" has been the common thought of the majority of Chinese people since before Romance of the Three Kingdoms was published."
EV_BAND = "Early influences on the band include Elvis Presley, Carl Perkins, Little Richard, and Chuck Berry. About Presley, Lennon said: \"Nothing attracted me until I heard Elvis.\""
EV_LEADER = "As a famous leader in Southeast Asia, according to Clark D. Neher, Ho Chi Minh combined Marxism-Leninism with Vietnamese nationalism. The main ideology in Ho Chi Minh's struggles was to combine national liberation revolution with proletarian revolution."
EV_DALAT = "The terrain of Da Lat is divided into two distinct types: mountainous terrain and mountainous plain terrain. To the south, the mountainous terrain transitions to a lower terrain level, characterized by the Prenn Pass area with high mountain ranges interspersed with deep valleys."
EV_USA = "The United States is a multicultural country, home to many diverse groups of races, traditions, and values. Dynamism is a characteristic of Americans, they always have the need to act to achieve their goals."

S_CLAIMS = {
    EV_FILM: "The scene between Wright and Hoeks was filmed in 2016.",
    EV_KINGDOMS: "Romance of the Three Kingdoms tends to favor the Shu and create hostility toward the Cao Dynasty.",
    EV_BAND: "Lennon expressed his admiration for Elvis when he heard him sing.",
    EV_LEADER: "The main ideology in Ho Chi Minh was to combine national liberation revolution with proletarian revolution, which originated from the combination of Marxism-Leninism with Vietnamese nationalism.",
    EV_DALAT: "The mountainous terrain in Da Lat gradually decreases towards the South, especially the Prenn Pass area.",
    EV_USA: "The United States, also known as America, is a country with diversity in many typical aspects such as racial diversity.",
}

R_CLAIMS = {
    EV_FILM: "Wright and Hoeks's splicing scene was the last scene to be filmed on set, and it took only 2 months for principal photography.",
    EV_KINGDOMS: "Romance of the Three Kingdoms is a work that does not contain any characters at all.",
    EV_BAND: "Only Chuck Berry was musically active and an early influence on the band.",
    EV_LEADER: "Ho Chi Minh, a famous leader in Europe when he only used the Marxist-Leninist school of thought as the main ideology of his struggles.",
    EV_DALAT: "The terrain of Da Lat is completely flat, and the Prenn Pass area to the south has the highest elevation of the whole region.",
    EV_USA: "The United States is a country with low cultural diversity when only one race lives.",
}

N_CLAIMS = {
    EV_FILM: "The scene between Wright and Hoeks was praised by critics as the most memorable moment of the film.",
    EV_KINGDOMS: "Romance of the Three Kingdoms was required reading in Chinese schools for most of the twentieth century.",
    EV_BAND: "Lennon first heard an Elvis Presley record at a friend's house in Liverpool.",
    EV_LEADER: "Ho Chi Minh developed his main ideology while working as a teacher in Hue.",
    EV_DALAT: "The Prenn Pass area attracts thousands of tourists to Da Lat every year.",
    EV_USA: "Most immigrants to the United States settle on the west coast within their first year.",
}

STAGE1_EVIDENCES = {
    # every template reuses the same evidence pool so the packs stay
    # comparable across labels.
    "SUPPORTED": [EV_FILM, EV_KINGDOMS, EV_BAND, EV_LEADER, EV_DALAT],
    "REFUTED": [EV_FILM, EV_KINGDOMS, EV_BAND, EV_USA, EV_LEADER],
    "NEI": [EV_FILM, EV_KINGDOMS, EV_BAND, EV_LEADER, EV_DALAT],
}

CALIB_EVIDENCES = {
    "SUPPORTED": [EV_FILM, EV_KINGDOMS, EV_BAND, EV_LEADER, EV_DALAT],
    "REFUTED": [EV_FILM, EV_KINGDOMS, EV_BAND, EV_USA, EV_LEADER],
    "NEI": [EV_FILM, EV_KINGDOMS, EV_BAND, EV_USA, EV_LEADER],
}

CALIB_STAGE2_S = {
    # the calibration flow demonstrates longer supported variants for the
    # film and kingdoms evidences.
    EV_FILM: "The film took about 4 months and 4 days for principal photography, and the first scene to be filmed was Wright and Hoeks's splicing scene.",
    EV_KINGDOMS: "Romance of the Three Kingdoms is a work that contains real characters in Chinese history, and the representative is the Shu Han Dynasty king Liu Bei.",
    EV_BAND: "Carl Perkins, Little Richard and Chuck Berry were musical figures and early influences on the band.",
    EV_USA: "The United States, also known as America, is a country with diversity in many typical aspects such as racial diversity.",
    EV_LEADER: "Ho Chi Minh, a famous leader whose ideology was the combination of national liberation revolution with proletarian revolution.",
}


def preamble(stage: str, label: str) -> str:
    if stage == "uncalibrated":
        return ROLE + "\n" + TASK_PLAIN[label]
    if stage == "calibration":
        task = TASK_CALIB.get(label, TASK_GROUP[label])
        return ROLE + " " + ALL_DEFS + "\n" + task
    return ROLE + " " + ALL_DEFS + "\n" + TASK_GROUP[label]


def stage1_examples(label: str) -> list[dict]:
    claims = {"SUPPORTED": S_CLAIMS, "REFUTED": R_CLAIMS, "NEI": N_CLAIMS}[label]
    return [
        {"evidence": ev, "claims": {label: claims[ev]}}
        for ev in STAGE1_EVIDENCES[label]
    ]


def calibration_examples(label: str) -> list[dict]:
    out = []
    for ev in CALIB_EVIDENCES[label]:
        if label == "SUPPORTED":
            claims = {"SUPPORTED": S_CLAIMS[ev]}
        elif label == "REFUTED":
            claims = {"SUPPORTED": CALIB_STAGE2_S[ev], "REFUTED": R_CLAIMS[ev]}
        else:
            claims = {
                "SUPPORTED": CALIB_STAGE2_S[ev],
                "REFUTED": R_CLAIMS[ev],
                "NEI": N_CLAIMS[ev],
            }
        out.append({"evidence": ev, "claims": claims})
    return out


SLOTS = {
    ("calibration", "REFUTED"): ["supported_claim"],
    ("calibration", "NEI"): ["supported_claim", "refuted_claim"],
}

pack = {"name": "default-en", "language": "en", "stages": {}}
for stage in ("uncalibrated", "calibration", "alignment"):
    pack["stages"][stage] = {}
    for label in ("SUPPORTED", "REFUTED", "NEI"):
        if stage == "uncalibrated":
            examples = stage1_examples(label)
        elif stage == "calibration":
            examples = calibration_examples(label)
        else:
            examples = []
        pack["stages"][stage][label] = {
            "role_preamble": preamble(stage, label),
            "rules": RULES[label],
            "examples": examples,
            "slots": SLOTS.get((stage, label), []),
        }

out = Path(__file__).resolve().parents[1] / "src" / "vifactgen" / "data" / "prompt_pack.json"
out.parent.mkdir(parents=True, exist_ok=True)
out.write_text(json.dumps(pack, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
print(f"wrote {out}")
