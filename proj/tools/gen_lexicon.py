"""Regenerates data/pos_lexicon.tsv and data/lemma_exceptions.tsv."""
import collections
closed = {
 'DET': "a an the this that these those each every some any no all both either neither another such what which whose its their his her our your my".split(),
 'PRON': "i me you he him she it we us they them myself yourself himself herself itself ourselves themselves who whom whoever something anything nothing everything someone anyone everyone nobody one mine yours hers ours theirs".split(),
 'ADP': "of in on at by for with from to into onto via through over under about against between among during before after within without across toward towards upon since until behind beyond beside besides per like despite except throughout along around inside outside near as".split(),
 'AUX': "be is are was were been being am has have had having do does did done can could will would shall should may might must".split(),
 'CCONJ': "and or but nor yet so while whereas because although though if unless whether once than".split(),
 'PART': "not n't 's".split(),
}
# Override: pronoun-like determiners
det_pron = {"that","this","these","those","which","what","some","any","all","both","each","one"}
verbs_only = """accept access achieve acquire act add adopt affect aim allow alter analyze analyse appear apply arrive ask assess assign associate assume attach attempt attribute authenticate avoid become begin believe belong block bring build bypass call capture carry cause change check choose claim clean collect combine come communicate compile complete compromise conceal conduct confirm connect consider contain continue contribute control copy correlate create deactivate debug decide declare decode decompress decrypt define delete deliver deploy describe destroy detect determine develop disable disclose discover disguise display disrupt distribute download drop dub dump edit elevate embed emerge employ enable encode encounter encrypt engage enhance enter enumerate erase escalate establish evade examine execute exfiltrate exhibit exist expand expect exploit expose extend extract fail fetch find focus follow force forge gain gather generate get give go harvest help hide hijack host identify ignore impersonate implement include increase indicate infect infiltrate inject install intercept introduce investigate invoke issue keep know label launch lead learn leave leverage link list load locate lock log maintain make manipulate masquerade match mention migrate mimic modify monitor move name need note notify obfuscate observe obtain occur open operate originate overwrite pack perform persist pivot place poison possess prepare prevent proceed produce propagate protect provide publish pull purchase pursue push query reach read receive recover redirect reference register release rely remain remove rename replace replicate report request require reside resolve restore retrieve return reuse reveal run say scan schedule search see seek seize select sell send serve set share show sign spawn spread stage start steal stop store submit succeed suggest supply support suspect switch take target tell terminate test think track transfer transmit trick trigger try turn uncover understand unpack update upload use utilize verify wipe write""".split()
noun_verb = """attack access abuse alert archive backup beacon breach call change command comment compromise connection control copy crash damage delay demand design display download drop dump email end error exploit file focus hack help hijack host impact implant increase infection inject install issue key lead leak link list load lock log look mail mask match message mirror move name need note offer order package patch phish plan post power print process profile proxy query reach record release report request rise run scan schedule script search share shell sign signal spam spoof spy stage start state step store strike study supply support surge survey target task test tool track trade transfer trust tunnel turn update upload use visit watch work wrap""".split()
nouns = """account activity actor address administrator adversary advisory agency agent algorithm analysis analyst anomaly antivirus apt application architecture archive area argument artifact asset attacker attachment attempt authentication author authority backdoor bank bandwidth behavior behaviour binary blog bot botnet browser buffer bug business cache campaign capability card case certificate chain channel cloud cluster code collection company component computer configuration contact content context contractor country credential crew criminal customer cyber cybercrime cybersecurity data database day defender defense department detection developer device directory document domain dropper effort election email embassy employee encryption endpoint energy enterprise entity environment espionage evidence exfiltration executable execution extension family feature filename finance firewall firm firmware flaw folder form framework function gang government group hacker hash header healthcare history hospital identity image implant incident individual industry information infrastructure injection input instance institution intelligence interface internet intrusion investigation keylogger kit language laptop layer level library loader location machine macro malware manufacturer memory method ministry mitigation model module month nation network news number object office operation operator organization organisation origin owner page parameter partner password path payload people period persistence phishing platform plugin point policy port portal privilege procedure product program programme protocol provider purpose ransom ransomware rat reconnaissance region registry research researcher resource result risk rootkit router sample scheme sector security sender sequence server service session setting site software source spyware stealer string subsidiary system tactic team technique technology telecommunications thread threat time token traffic trojan type utility variant vector vendor version victim virus vulnerability weakness website week window wiper worm year""".split()
part_adjs = 'compromised encrypted obfuscated targeted known related based hidden'.split()
adjs = """active additional advanced aggressive available bad based basic chinese common compromised complex critical current custom dangerous different digital direct early encrypted entire external false financial first following foreign free full global good great hidden high important initial internal iranian known large last late latest legitimate likely local long low main major malicious many military modular more most multiple national new next north northern notable novel numerous obfuscated old other particular past persistent possible potential previous primary private public recent related remote responsible russian same second secure sensitive several significant similar simple single small social south specific sophisticated state strategic strong successful such suspicious targeted technical third top unique unknown unusual various vulnerable weak wide""".split()
advs = "also already again always currently even ever further however instead just later likely mainly never now often only previously primarily recently still then there thus too very well first here soon subsequently".split()
num = "one two three four five six seven eight nine ten hundred thousand million".split()

entries = collections.OrderedDict()
def add(w, cls, tags):
    if w in entries:
        c, t = entries[w]
        for x in tags:
            if x not in t: t.append(x)
    else:
        entries[w] = (cls, list(tags))
for tag, ws in closed.items():
    for w in ws:
        add(w, 'closed', [tag])
for w in det_pron:
    add(w, 'closed', ['PRON'])
entries['to'] = ('closed', ['ADP', 'PART'])
entries['one'] = ('closed', ['NUM', 'PRON'])
entries['that'] = ('closed', ['DET', 'PRON'])
for w in verbs_only: add(w, 'open', ['VERB'])
for w in noun_verb: add(w, 'open', ['NOUN', 'VERB'])
for w in nouns:
    if w in entries and entries[w][0] == 'open' and 'VERB' in entries[w][1]:
        entries[w][1].insert(0, 'NOUN') if 'NOUN' not in entries[w][1] else None
    else:
        add(w, 'open', ['NOUN'])
for w in adjs:
    if w not in part_adjs: add(w, 'open', ['ADJ'])
for w in part_adjs: add(w, 'open', ['ADJ', 'VERB'])
for w in advs: add(w, 'open', ['ADV'])
for w in num: add(w, 'open', ['NUM'])
with open('data/pos_lexicon.tsv', 'w') as f:
    f.write('# word\tclass\ttags (first = majority tag)\n')
    for w, (c, t) in sorted(entries.items(), key=lambda kv: (kv[1][0] != 'closed', kv[0])):
        f.write(f'{w}\t{c}\t{",".join(t)}\n')
irregular = """was be
were be
is be
are be
am be
been be
being be
has have
had have
having have
does do
did do
done do
began begin
begun begin
bought buy
brought bring
built build
caught catch
chose choose
chosen choose
came come
dealt deal
drew draw
drawn draw
drove drive
driven drive
fell fall
fallen fall
felt feel
fought fight
found find
forgot forget
forgotten forget
gave give
given give
got get
gotten get
went go
gone go
grew grow
grown grow
held hold
hid hide
hidden hide
hit hit
kept keep
knew know
known know
laid lay
led lead
left leave
lent lend
lost lose
made make
meant mean
met meet
paid pay
put put
ran run
read read
rose rise
risen rise
said say
saw see
seen see
sent send
set set
shown show
showed show
shut shut
sold sell
sought seek
spent spend
split split
spread spread
stood stand
stole steal
stolen steal
struck strike
stricken strike
swept sweep
taken take
took take
taught teach
thought think
told tell
threw throw
thrown throw
understood understand
undertook undertake
undertaken undertake
uploaded upload
withdrew withdraw
won win
wrote write
written write
children child
people person
men man
women woman
mice mouse
data data
analyses analysis
indices index
viruses virus
aliases alias
addresses address
processes process
accesses access
businesses business
campaigns campaign
""".strip().splitlines()
with open('data/lemma_exceptions.tsv', 'w') as f:
    f.write('# inflected form\tlemma\n')
    for l in irregular:
        a, b = l.split()
        f.write(f'{a}\t{b}\n')
print(len(entries))
