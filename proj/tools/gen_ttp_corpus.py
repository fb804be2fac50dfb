#!/usr/bin/env python3
"""Generate the bundled toy TTP corpus (data/ttp_corpus.jsonl) and label space (data/ttp_labels.json)."""
import json
import random

LABELS = [
    ("TA0007", "Discovery", "x-mitre-tactic"),
    ("TA0010", "Exfiltration", "x-mitre-tactic"),
    ("T1518", "Software Discovery", "attack-pattern"),
    ("T1059", "Command and Scripting Interpreter", "attack-pattern"),
    ("T1566", "Phishing", "attack-pattern"),
    ("T1486", "Data Encrypted for Impact", "attack-pattern"),
    ("T1071", "Application Layer Protocol", "attack-pattern"),
    ("T1003", "OS Credential Dumping", "attack-pattern"),
    ("T1547", "Boot or Logon Autostart Execution", "attack-pattern"),
    ("T1027", "Obfuscated Files or Information", "attack-pattern"),
]

PHRASES = {
    "TA0007": ["enumerated the network shares", "listed running processes", "queried the domain controller for accounts",
               "ran a discovery sweep of local hosts", "collected system information with systeminfo",
               "mapped the internal network topology", "scanned for open ports on adjacent hosts"],
    "TA0010": ["exfiltrated the archive to a remote server", "uploaded stolen documents to cloud storage",
               "staged data for exfiltration", "transferred the collected files over an encrypted channel",
               "sent the compressed data out of the network", "moved stolen data to attacker infrastructure"],
    "T1518": ["enumerated installed software", "checked for installed security products",
              "queried the registry for installed applications", "listed antivirus software on the host",
              "inspected the software inventory", "searched for installed browsers and their versions"],
    "T1059": ["executed a powershell script", "launched commands through cmd.exe", "ran a python one-liner",
              "spawned a bash shell", "invoked encoded powershell commands", "used the command interpreter to run the payload"],
    "T1566": ["sent a spearphishing email with a malicious attachment", "lured the victim with a phishing link",
              "delivered a weaponized word document by email", "crafted a fake invoice email",
              "the phishing message contained a malicious macro", "targeted employees with phishing emails"],
    "T1486": ["encrypted files on the victim machines", "dropped a ransom note after encrypting the disk",
              "appended a new extension to encrypted files", "demanded a ransom for the decryption key",
              "encrypted network shares to disrupt operations", "the ransomware encrypted the backups"],
    "T1071": ["communicated with the command and control server over https", "beaconed to its c2 over http",
              "used dns queries for command and control", "hid c2 traffic in web requests",
              "polled the server over http for new tasks", "sent heartbeat requests over the web protocol"],
    "T1003": ["dumped credentials from lsass memory", "ran mimikatz to harvest passwords",
              "extracted password hashes from the sam database", "dumped the ntds.dit file",
              "harvested cached credentials from memory", "stole credential material from the lsass process"],
    "T1547": ["added a registry run key for persistence", "created a startup folder shortcut",
              "installed itself to run at logon", "modified the winlogon registry key",
              "registered an autostart entry to survive reboots", "placed a link in the startup directory"],
    "T1027": ["obfuscated the script with base64 encoding", "packed the binary to evade detection",
              "used string encryption to hide its configuration", "the payload was heavily obfuscated",
              "encoded the shellcode with a xor key", "compressed and encrypted the embedded payload"],
}

FILLER = ["The actor", "The operators", "In this intrusion the attackers", "Analysts observed that the malware",
          "According to the report the group", "During the campaign the intruders", "Later the implant",
          "On the compromised host the threat actor"]
NOISE = ["The investigation is ongoing.", "Indicators are listed in the appendix.", "The victim was a regional bank.",
         "Activity was observed in March.", "The report was shared with partners.", "Several sectors were affected.",
         "The samples were submitted for analysis.", "Detection rules were updated."]


def make_doc(rng, labels):
    sents = []
    for lab in labels:
        for phrase in rng.sample(PHRASES[lab], rng.randint(2, 3)):
            sents.append(f"{rng.choice(FILLER)} {phrase}.")
    sents += rng.sample(NOISE, rng.randint(1, 3))
    rng.shuffle(sents)
    return " ".join(sents)


def main():
    rng = random.Random(20231)
    ids = [l[0] for l in LABELS]
    docs = []
    for lab in ids:  # 20 single-label documents per label
        for _ in range(20):
            docs.append((make_doc(rng, [lab]), [lab]))
    pairs = [("T1518", "TA0007"), ("T1566", "T1059"), ("T1486", "T1027"), ("T1071", "TA0010"), ("T1003", "T1547")]
    for a, b in pairs:  # 8 two-label documents per pair
        for _ in range(8):
            docs.append((make_doc(rng, [a, b]), sorted([a, b])))
    rng.shuffle(docs)
    with open("data/ttp_corpus.jsonl", "w") as f:
        for text, labs in docs:
            f.write(json.dumps({"text": text, "labels": labs}) + "\n")
    with open("data/ttp_labels.json", "w") as f:
        json.dump({"labels": [{"id": i, "name": n, "stix_type": t} for i, n, t in LABELS]}, f, indent=2)
        f.write("\n")
    print(len(docs), "documents")


if __name__ == "__main__":
    main()
