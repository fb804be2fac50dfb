"""Regenerates data/taxonomy.json and data/sro_catalog.json."""
import json

# (synset id, lemmas, children). Depth of a top-level synset is 1.
TREE = [
 ("act.v.01", ["act", "move"], [
   ("interact.v.01", ["interact"], [
     ("contend.v.01", ["contend", "fight", "struggle"], [
       ("attack.v.01", ["attack", "assail", "assault"], [
         ("strike.v.01", ["strike", "hit"], []),
         ("raid.v.01", ["raid", "storm"], []),
         ("bombard.v.01", ["bombard", "flood"], []),
         ("compromise.v.01", ["compromise", "breach", "infiltrate", "penetrate", "hack"], [
           ("hijack.v.01", ["hijack", "commandeer"], []),
           ("backdoor.v.01", ["backdoor"], []),
         ]),
         ("besiege.v.01", ["besiege", "siege"], []),
       ]),
       ("compete.v.01", ["compete", "vie", "rival"], []),
       ("oppose.v.01", ["oppose", "counter", "resist"], [
         ("block.v.01", ["block", "prevent", "stop", "hinder", "thwart"], []),
         ("neutralize.v.01", ["neutralize", "counteract"], []),
       ]),
       ("defend.v.01", ["defend", "protect", "guard", "shield"], [
         ("secure.v.01", ["secure", "harden"], []),
       ]),
       ("retaliate.v.01", ["retaliate", "avenge"], []),
     ]),
     ("direct.v.01", ["direct", "aim", "point", "orient"], [
       ("target.v.01", ["target"], [
         ("focus.v.01", ["focus", "concentrate", "center"], []),
         ("single_out.v.01", ["single_out", "pick_out"], []),
       ]),
       ("steer.v.01", ["steer", "guide", "route"], [
         ("redirect.v.01", ["redirect", "reroute"], []),
       ]),
     ]),
     ("relate.v.01", ["relate", "associate", "link"], [
       ("connect.v.01", ["connect", "join", "tie", "bind"], [
         ("derive.v.01", ["derive", "descend"], [
           ("originate.v.01", ["originate", "stem", "arise", "emanate"], []),
           ("inherit.v.01", ["inherit"], []),
         ]),
         ("attach.v.01", ["attach", "append", "affix"], []),
         ("couple.v.01", ["couple", "pair"], []),
       ]),
       ("attribute.v.01", ["attribute", "ascribe", "assign", "credit", "impute"], []),
       ("correlate.v.01", ["correlate", "match"], []),
       ("vary.v.01", ["vary", "diverge", "differ"], []),
       ("resemble.v.01", ["resemble", "mimic"], []),
     ]),
     ("communicate.v.01", ["communicate", "intercommunicate"], [
       ("inform.v.01", ["inform", "notify", "tell", "advise"], [
         ("indicate.v.01", ["indicate", "signal", "signify", "suggest", "show"], [
           ("reveal.v.01", ["reveal", "disclose", "expose"], []),
           ("confirm.v.01", ["confirm", "corroborate"], []),
         ]),
         ("report.v.01", ["report", "announce", "publish"], []),
         ("warn.v.01", ["warn", "alert"], []),
         ("name.v.01", ["name", "call", "dub", "label", "designate", "track"], []),
         ("describe.v.01", ["describe", "characterize", "document"], []),
       ]),
       ("message.v.01", ["message", "email", "mail"], [
         ("phish.v.01", ["phish", "spearphish"], []),
         ("spam.v.01", ["spam"], []),
       ]),
       ("beacon.v.01", ["beacon", "call_back", "ping"], []),
       ("contact.v.01", ["contact", "reach"], []),
       ("request.v.01", ["request", "ask", "query", "demand"], []),
       ("reply.v.01", ["reply", "respond", "answer"], []),
       ("claim.v.01", ["claim", "assert", "state"], []),
     ]),
     ("transfer.v.01", ["transfer", "pass", "hand"], [
       ("give.v.01", ["give", "provide", "supply", "offer"], [
         ("deliver.v.01", ["deliver", "distribute", "serve"], []),
         ("send.v.01", ["send", "transmit", "dispatch", "forward"], [
           ("exfiltrate.v.01", ["exfiltrate", "leak", "smuggle"], []),
           ("upload.v.01", ["upload", "push"], []),
           ("broadcast.v.01", ["broadcast"], []),
         ]),
         ("share.v.01", ["share"], []),
         ("lend.v.01", ["lend", "loan"], []),
       ]),
       ("sell.v.01", ["sell", "trade", "market"], [
         ("lease.v.01", ["lease", "rent"], []),
       ]),
       ("buy.v.01", ["buy", "purchase"], []),
       ("pay.v.01", ["pay", "fund", "finance"], []),
     ]),
     ("cooperate.v.01", ["cooperate", "collaborate", "partner"], [
       ("help.v.01", ["help", "assist", "aid", "support"], []),
       ("sponsor.v.01", ["sponsor", "back"], []),
     ]),
     ("deceive.v.01", ["deceive", "trick", "fool", "dupe", "lure"], [
       ("impersonate.v.01", ["impersonate", "pose", "masquerade", "spoof"], []),
       ("disguise.v.01", ["disguise", "camouflage"], []),
       ("bait.v.01", ["bait", "entice"], []),
     ]),
     ("meet.v.01", ["meet", "encounter"], []),
     ("threaten.v.01", ["threaten", "menace", "extort", "blackmail"], []),
   ]),
   ("use.v.01", ["use", "utilize", "employ", "leverage", "apply"], [
     ("exploit.v.01", ["exploit", "abuse", "weaponize"], []),
     ("deploy.v.01", ["deploy", "install", "implant", "set_up"], [
       ("plant.v.01", ["plant", "embed"], []),
     ]),
     ("run.v.01", ["run", "execute", "launch", "operate", "invoke"], [
       ("spawn.v.01", ["spawn", "fork"], []),
     ]),
     ("rely.v.01", ["rely", "depend"], []),
     ("consume.v.01", ["consume", "expend"], []),
     ("reuse.v.01", ["reuse", "recycle"], []),
   ]),
   ("get.v.01", ["get", "acquire", "obtain", "gain"], [
     ("take.v.01", ["take", "steal", "grab", "seize", "harvest"], [
       ("dump.v.01", ["dump", "scrape"], []),
       ("capture.v.01", ["capture", "intercept", "sniff"], []),
       ("kidnap.v.01", ["kidnap", "abduct"], []),
     ]),
     ("download.v.01", ["download", "fetch", "retrieve", "pull"], []),
     ("receive.v.01", ["receive", "accept"], []),
     ("collect.v.01", ["collect", "gather", "amass", "aggregate"], [
       ("scan.v.01", ["scan", "enumerate", "probe"], []),
     ]),
     ("earn.v.01", ["earn", "win"], []),
   ]),
   ("create.v.01", ["create", "make", "produce", "generate"], [
     ("author.v.01", ["author", "write", "compose", "develop", "code", "program"], []),
     ("build.v.01", ["build", "construct", "assemble", "compile"], []),
     ("design.v.01", ["design", "plan", "engineer"], []),
     ("forge.v.01", ["forge", "counterfeit", "fake"], []),
     ("copy.v.01", ["copy", "replicate", "duplicate", "clone"], []),
     ("establish.v.01", ["establish", "found", "set"], []),
   ]),
   ("change.v.01", ["change", "alter", "modify"], [
     ("convert.v.01", ["convert", "transform"], [
       ("translate.v.01", ["translate", "render"], [
         ("decode.v.01", ["decode", "decrypt", "decipher", "unpack", "decompress"], []),
         ("encode.v.01", ["encode", "encrypt", "obfuscate", "pack", "compress", "encipher"], []),
       ]),
       ("format.v.01", ["format", "reformat"], []),
     ]),
     ("decrease.v.01", ["decrease", "reduce", "lessen", "diminish"], [
       ("mitigate.v.01", ["mitigate", "alleviate", "remediate", "mollify"], []),
       ("limit.v.01", ["limit", "restrict", "confine"], []),
     ]),
     ("increase.v.01", ["increase", "raise", "boost"], [
       ("escalate.v.01", ["escalate", "elevate"], []),
       ("expand.v.01", ["expand", "extend", "grow"], []),
     ]),
     ("destroy.v.01", ["destroy", "wipe", "erase", "delete", "remove"], [
       ("overwrite.v.01", ["overwrite", "clobber"], []),
     ]),
     ("damage.v.01", ["damage", "harm", "corrupt", "impair"], [
       ("disrupt.v.01", ["disrupt", "interrupt"], []),
       ("infect.v.01", ["infect", "contaminate", "poison"], []),
     ]),
     ("disable.v.01", ["disable", "deactivate", "kill"], []),
     ("enable.v.01", ["enable", "activate", "allow"], []),
     ("update.v.01", ["update", "patch", "upgrade", "fix"], []),
     ("rename.v.01", ["rename", "retitle"], []),
     ("hide.v.01", ["hide", "conceal", "mask", "cloak"], []),
     ("lock.v.01", ["lock", "ransom"], []),
     ("open.v.01", ["open", "unlock"], []),
   ]),
   ("travel.v.01", ["travel", "go", "proceed"], [
     ("spread.v.01", ["spread", "propagate", "disseminate", "circulate"], [
       ("worm.v.01", ["worm"], []),
     ]),
     ("enter.v.01", ["enter", "come_in"], []),
     ("arrive.v.01", ["arrive", "land"], []),
     ("leave.v.01", ["leave", "exit", "depart"], []),
     ("pivot.v.01", ["pivot", "traverse"], []),
     ("migrate.v.01", ["migrate", "relocate"], []),
     ("return.v.01", ["return", "come_back"], []),
     ("follow.v.01", ["follow", "trail"], []),
   ]),
   ("displace.v.01", ["displace", "put", "place", "position"], [
     ("drop.v.01", ["drop", "release", "deposit"], [
       ("shed.v.01", ["shed", "discard"], []),
     ]),
   ]),
   ("control.v.01", ["control", "command", "manage", "administer"], [
     ("host.v.01", ["host", "house", "store"], []),
     ("own.v.01", ["own", "possess", "hold"], []),
     ("govern.v.01", ["govern", "rule"], []),
     ("monitor.v.01", ["monitor", "watch", "surveil", "spy"], []),
     ("maintain.v.01", ["maintain", "keep", "persist"], []),
     ("schedule.v.01", ["schedule"], []),
   ]),
   ("try.v.01", ["try", "attempt", "seek"], []),
   ("start.v.01", ["start", "begin", "commence", "initiate"], [
     ("resume.v.01", ["resume", "restart"], []),
   ]),
   ("end.v.01", ["end", "finish", "terminate", "cease"], []),
   ("continue.v.01", ["continue", "keep_on"], []),
   ("prepare.v.01", ["prepare", "ready", "stage"], []),
   ("perform.v.01", ["perform", "conduct", "carry_out", "do"], []),
 ]),
 ("be.v.01", ["be", "exist"], [
   ("locate.v.01", ["locate", "situate", "site", "base", "reside", "live", "stay"], []),
   ("consist.v.01", ["consist", "comprise", "contain", "include"], []),
   ("have.v.01", ["have", "feature"], []),
   ("belong.v.01", ["belong"], []),
   ("remain.v.01", ["remain", "persist_in"], []),
   ("seem.v.01", ["seem", "appear", "look"], []),
   ("equal.v.01", ["equal", "constitute"], []),
   ("lack.v.01", ["lack", "miss"], []),
 ]),
 ("think.v.01", ["think", "cogitate", "reason"], [
   ("know.v.01", ["know", "recognize"], []),
   ("discover.v.01", ["discover", "find", "detect", "identify", "uncover", "observe", "spot"], [
     ("notice.v.01", ["notice", "note"], []),
   ]),
   ("analyze.v.01", ["analyze", "analyse", "examine", "investigate", "study", "research", "inspect"], [
     ("reverse.v.01", ["reverse_engineer", "disassemble"], []),
     ("test.v.01", ["test", "check", "verify", "validate"], []),
   ]),
   ("believe.v.01", ["believe", "suspect", "assess"], []),
   ("decide.v.01", ["decide", "determine", "choose", "select"], []),
   ("learn.v.01", ["learn", "understand"], []),
   ("remember.v.01", ["remember", "recall"], []),
   ("expect.v.01", ["expect", "anticipate", "predict"], []),
   ("want.v.01", ["want", "need", "require"], []),
   ("intend.v.01", ["intend", "mean"], []),
 ]),
 ("happen.v.01", ["happen", "occur", "take_place"], [
   ("emerge.v.01", ["emerge", "surface"], []),
   ("fail.v.01", ["fail", "crash"], []),
   ("succeed.v.01", ["succeed", "manage_to"], []),
 ]),
]

synsets = []
def walk(node, parent):
    sid, lemmas, kids = node
    synsets.append({"id": sid, "parent": parent, "lemmas": lemmas})
    for k in kids:
        walk(k, sid)
for top in TREE:
    walk(top, None)

seen = set()
for s in synsets:
    assert s["id"] not in seen, s["id"]
    seen.add(s["id"])
lemma_seen = {}
for s in synsets:
    for l in s["lemmas"]:
        assert l not in lemma_seen, (l, s["id"], lemma_seen.get(l))
        lemma_seen[l] = s["id"]

with open("data/taxonomy.json", "w") as f:
    json.dump({"version": 1, "synsets": synsets}, f, indent=1)
print(len(synsets), "synsets")

# STIX 2.1 common relationships (source type, relationship type, target type, verb lemma).
def rows(src, rel, verb, targets):
    return [(src, rel, t, verb) for t in targets]

CAT = []
CAT += rows("attack-pattern", "delivers", "deliver", ["malware"])
CAT += rows("attack-pattern", "targets", "target", ["identity", "location", "vulnerability"])
CAT += rows("attack-pattern", "uses", "use", ["malware", "tool"])
CAT += rows("campaign", "attributed-to", "attribute", ["intrusion-set", "threat-actor"])
CAT += rows("campaign", "compromises", "compromise", ["infrastructure"])
CAT += rows("campaign", "originates-from", "originate", ["location"])
CAT += rows("campaign", "targets", "target", ["identity", "location", "vulnerability"])
CAT += rows("campaign", "uses", "use", ["attack-pattern", "infrastructure", "malware", "tool"])
CAT += rows("course-of-action", "mitigates", "mitigate", ["attack-pattern", "indicator", "malware", "tool", "vulnerability"])
CAT += rows("identity", "located-at", "locate", ["location"])
CAT += rows("indicator", "indicates", "indicate", ["attack-pattern", "campaign", "infrastructure", "intrusion-set", "malware", "threat-actor", "tool"])
CAT += rows("infrastructure", "communicates-with", "communicate", ["infrastructure"])
CAT += rows("infrastructure", "consists-of", "consist", ["infrastructure"])
CAT += rows("infrastructure", "controls", "control", ["infrastructure", "malware"])
CAT += rows("infrastructure", "delivers", "deliver", ["malware"])
CAT += rows("infrastructure", "has", "have", ["vulnerability"])
CAT += rows("infrastructure", "hosts", "host", ["tool", "malware"])
CAT += rows("infrastructure", "located-at", "locate", ["location"])
CAT += rows("infrastructure", "uses", "use", ["infrastructure"])
CAT += rows("intrusion-set", "attributed-to", "attribute", ["threat-actor"])
CAT += rows("intrusion-set", "compromises", "compromise", ["infrastructure"])
CAT += rows("intrusion-set", "hosts", "host", ["infrastructure"])
CAT += rows("intrusion-set", "owns", "own", ["infrastructure"])
CAT += rows("intrusion-set", "originates-from", "originate", ["location"])
CAT += rows("intrusion-set", "targets", "target", ["identity", "location", "vulnerability"])
CAT += rows("intrusion-set", "uses", "use", ["attack-pattern", "infrastructure", "malware", "tool"])
CAT += rows("malware", "authored-by", "author", ["threat-actor", "intrusion-set"])
CAT += rows("malware", "beacons-to", "beacon", ["infrastructure"])
CAT += rows("malware", "exfiltrates-to", "exfiltrate", ["infrastructure"])
CAT += rows("malware", "communicates-with", "communicate", ["indicator"])
CAT += rows("malware", "controls", "control", ["malware"])
CAT += rows("malware", "downloads", "download", ["malware", "tool"])
CAT += rows("malware", "drops", "drop", ["malware", "tool"])
CAT += rows("malware", "exploits", "exploit", ["vulnerability"])
CAT += rows("malware", "originates-from", "originate", ["location"])
CAT += rows("malware", "targets", "target", ["identity", "infrastructure", "location", "vulnerability"])
CAT += rows("malware", "uses", "use", ["attack-pattern", "infrastructure", "malware", "tool"])
CAT += rows("malware", "variant-of", "vary", ["malware"])
CAT += rows("threat-actor", "attributed-to", "attribute", ["identity"])
CAT += rows("threat-actor", "compromises", "compromise", ["infrastructure"])
CAT += rows("threat-actor", "hosts", "host", ["infrastructure"])
CAT += rows("threat-actor", "impersonates", "impersonate", ["identity"])
CAT += rows("threat-actor", "located-at", "locate", ["location"])
CAT += rows("threat-actor", "owns", "own", ["infrastructure"])
CAT += rows("threat-actor", "targets", "target", ["identity", "location", "vulnerability"])
CAT += rows("threat-actor", "uses", "use", ["attack-pattern", "infrastructure", "malware", "tool"])
CAT += rows("tool", "delivers", "deliver", ["malware"])
CAT += rows("tool", "drops", "drop", ["malware"])
CAT += rows("tool", "has", "have", ["vulnerability"])
CAT += rows("tool", "targets", "target", ["identity", "infrastructure", "location", "vulnerability"])
CAT += rows("tool", "uses", "use", ["infrastructure"])

assert len(set(CAT)) == len(CAT)
for s, r, t, v in CAT:
    assert v in lemma_seen, v
with open("data/sro_catalog.json", "w") as f:
    json.dump([{"source": s, "rel": r, "target": t, "verb": v} for s, r, t, v in CAT], f, indent=1)
print(len(CAT), "catalog entries")
