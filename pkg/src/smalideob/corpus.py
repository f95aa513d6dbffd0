"""Seeded generators for clean Smali corpora and random analysis targets.

``english_corpus`` builds app-like classes whose literals are English text,
plus a few library classes under excluded prefixes.  ``random_method``
builds small straight-line-plus-branches methods that feed a literal and an
integer key into a String decoder, for comparing slice execution against
whole-method execution.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .frontend import MethodDef, SmaliProgram, parse_smali

WORDS = (
    "the of and to a in is it you that he was for on are with as his they be at one have this "
    "from or had by word but what some we can out other were all there when up use your how "
    "said an each she which do their time if will way about many then them write would like so "
    "these her long make thing see him two has look more day could go come did number sound no "
    "most people my over know water than call first who may down side been now find any new "
    "work part take get place made live where after back little only round man year came show "
    "every good me give our under name very through just form sentence great think say help low "
    "line differ turn cause much mean before move right boy old too same tell does set three "
    "want air well also play small end put home read hand port large spell add even land here "
    "must big high such follow act why ask men change went light kind off need house picture "
    "try us again animal point mother world near build self earth father head stand own page "
    "should country found answer school grow study still learn plant cover food sun four "
    "between state keep eye never last let thought city tree cross farm hard start might story "
    "saw far sea draw left late run while press close night real life few north open seem"
).split()

IDENTIFIERS = (
    "MY_SECRET_KEY", "user_id", "session_token", "https://api.example.com/v1/login",
    "com.example.app.PREFS", "application/json", "Content-Type", "Authorization",
    "yyyy-MM-dd HH:mm:ss", "%s=%d", "UTF-8", "device_id", "/data/local/tmp",
)

LIBRARY_CLASSES = (
    "Lokhttp3/internal/Util;",
    "Landroidx/core/app/Helper;",
    "Lcom/google/gson/Names;",
)

SINK = "Lapp/Sink;"


def english_text(rng: random.Random, min_words: int = 2, max_words: int = 8) -> str:
    words = [rng.choice(WORDS) for _ in range(rng.randint(min_words, max_words))]
    text = " ".join(words)
    if rng.random() < 0.5:
        text = text[0].upper() + text[1:]
    if rng.random() < 0.3:
        text += rng.choice(".!?:")
    return text


def _literal(rng: random.Random, identifiers: bool) -> str:
    if identifiers and rng.random() < 0.1:
        return rng.choice(IDENTIFIERS)
    return english_text(rng)


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def _method_text(rng: random.Random, cls: str, name: str, literals: int, fields: list[str],
                 identifiers: bool) -> str:
    static = rng.random() < 0.5
    flags = "public static" if static else "public"
    sig = "(I)V"
    param = "p0" if static else "p1"
    body: list[str] = []
    for k in range(literals):
        text = _escape(_literal(rng, identifiers))
        form = rng.randrange(5)
        if rng.random() < 0.3:
            body.append(f"    const/4 v2, 0x{rng.randint(0, 7):x}")
            body.append(f"    add-int/lit8 v2, v2, 0x{rng.randint(1, 100):x}")
        if form == 0:
            body.append(f'    const-string v0, "{text}"')
            body.append(f"    invoke-static {{v0}}, {SINK}->use(Ljava/lang/String;)V")
        elif form == 1:
            fname = f"f{len(fields)}"
            fields.append(fname)
            body.append(f'    const-string v0, "{text}"')
            body.append(f"    sput-object v0, {cls}->{fname}:Ljava/lang/String;")
        elif form == 2:
            body.append("    new-instance v1, Ljava/lang/StringBuilder;")
            body.append("    invoke-direct {v1}, Ljava/lang/StringBuilder;-><init>()V")
            body.append(f'    const-string v0, "{text}"')
            body.append("    invoke-virtual {v1, v0}, Ljava/lang/StringBuilder;->"
                        "append(Ljava/lang/String;)Ljava/lang/StringBuilder;")
            body.append("    invoke-virtual {v1}, Ljava/lang/StringBuilder;->toString()Ljava/lang/String;")
            body.append("    move-result-object v0")
            body.append(f"    invoke-static {{v0}}, {SINK}->use(Ljava/lang/String;)V")
        elif form == 3:
            label = f"skip{k}"
            body.append(f"    if-eqz {param}, :{label}")
            body.append(f'    const-string v0, "{text}"')
            body.append(f"    invoke-static {{v0}}, {SINK}->use(Ljava/lang/String;)V")
            body.append(f"    :{label}")
        else:
            body.append(f'    const-string v1, "{text}"')
            body.append("    invoke-virtual {v1}, Ljava/lang/String;->length()I")
            body.append("    move-result v2")
            body.append(f"    invoke-static {{v1, v2}}, {SINK}->use(Ljava/lang/String;I)V")
        if rng.random() < 0.1:
            body.append('    const-string v0, ""')
    return "\n".join([f".method {flags} {name}{sig}", "    .locals 3", *body,
                      "    return-void", ".end method"])


def _class_text(rng: random.Random, cls: str, methods: int, literals: tuple[int, int],
                identifiers: bool) -> str:
    fields: list[str] = []
    bodies = [_method_text(rng, cls, f"m{k}", rng.randint(*literals), fields, identifiers)
              for k in range(methods)]
    head = [f".class public {cls}", ".super Ljava/lang/Object;", ""]
    head += [f".field public static {f}:Ljava/lang/String;" for f in fields]
    return "\n".join(head) + "\n\n" + "\n\n".join(bodies) + "\n"


_SINK_TEXT = f"""\
.class public final {SINK}
.super Ljava/lang/Object;

.method public static use(Ljava/lang/String;)V
    .locals 0
    return-void
.end method

.method public static use(Ljava/lang/String;I)V
    .locals 0
    return-void
.end method
"""


def english_corpus(seed: int, classes: int = 30, methods_per_class: int = 4,
                   literals_per_method: tuple[int, int] = (1, 4), library_classes: int = 2,
                   identifiers: bool = True) -> SmaliProgram:
    """A clean app-like corpus with English-text literals."""
    rng = random.Random(seed)
    program = SmaliProgram()
    descs = [f"Lapp/c{k:03d}/Screen;" for k in range(classes)]
    descs += list(LIBRARY_CLASSES[:library_classes])
    for desc in descs:
        cls = parse_smali(_class_text(rng, desc, methods_per_class, literals_per_method,
                                      identifiers))
        program.classes[desc] = cls
    sink = parse_smali(_SINK_TEXT)
    program.classes[sink.descriptor] = sink
    return program


def count_literals(program: SmaliProgram, exclusions=None) -> int:
    from .scanner import DEFAULT_EXCLUSIONS, find_string_literals, is_excluded_class
    exclusions = DEFAULT_EXCLUSIONS if exclusions is None else exclusions
    return sum(len(find_string_literals(m)) for c, m in program.iter_methods()
               if not is_excluded_class(c.descriptor, exclusions))


# ---------------------------------------------------------------------------
# random methods for slice-versus-method comparison

_SYN_SUPPORT = """\
.class public final Lsyn/Gate;
.super Ljava/lang/Object;

.field public static k:I

.method static constructor <clinit>()V
    .locals 1
    const/16 v0, 0x2a
    sput v0, Lsyn/Gate;->k:I
    return-void
.end method

.method public static T()I
    .locals 1
    const/16 v0, {tval}
    return v0
.end method

.method public static f(Ljava/lang/String;I)Ljava/lang/String;
    .locals 5
    invoke-virtual {{p0}}, Ljava/lang/String;->toCharArray()[C
    move-result-object v0
    and-int/lit8 v4, p1, 0x1f
    const/4 v1, 0x0
    :loop
    array-length v2, v0
    if-ge v1, v2, :done
    aget-char v3, v0, v1
    xor-int/2addr v3, v4
    int-to-char v3, v3
    aput-char v3, v0, v1
    add-int/lit8 v1, v1, 0x1
    goto :loop
    :done
    new-instance v2, Ljava/lang/String;
    invoke-direct {{v2, v0}}, Ljava/lang/String;-><init>([C)V
    return-object v2
.end method
"""

_INT_REGS = 6
_STR_REG = "v6"
_OUT_REG = "v7"
_BINOPS = ("add-int", "sub-int", "mul-int", "xor-int", "and-int", "or-int", "shl-int",
           "shr-int", "ushr-int")
_LITOPS = ("add-int/lit8", "xor-int/lit8", "mul-int/lit16", "rsub-int", "and-int/lit16",
           "shl-int/lit8")
_UNOPS = ("neg-int", "not-int", "int-to-short", "int-to-char", "int-to-byte")
_IFZ = ("if-eqz", "if-nez", "if-ltz", "if-gez", "if-gtz", "if-lez")
_IF2 = ("if-eq", "if-ne", "if-lt", "if-ge", "if-gt", "if-le")


@dataclass(frozen=True)
class SyntheticMethod:
    program: SmaliProgram
    method: MethodDef
    literal_index: int
    call_index: int      # the decoder invoke; the criterion is the next statement
    text: str


class _Gen:
    def __init__(self, rng: random.Random, max_statements: int, max_conditionals: int):
        self.rng = rng
        self.lines: list[str] = []
        self.count = 0
        self.max_statements = max_statements
        self.conditionals_left = rng.randint(0, max_conditionals)
        self.defined: list[int] = []
        self.labels = 0

    def emit(self, line: str) -> None:
        self.lines.append("    " + line)
        self.count += 1

    def reg(self) -> str:
        return f"v{self.rng.choice(self.defined)}"

    def write_target(self, in_branch: bool) -> str:
        if in_branch or len(self.defined) == _INT_REGS:
            return f"v{self.rng.choice(self.defined)}"
        fresh = [k for k in range(_INT_REGS) if k not in self.defined]
        k = self.rng.choice(fresh)
        self.defined.append(k)
        return f"v{k}"

    def simple(self, in_branch: bool) -> None:
        rng = self.rng
        kind = rng.randrange(6)
        if kind == 0 or not self.defined:
            dst = self.write_target(in_branch)
            self.emit(f"const/16 {dst}, {rng.randint(-2000, 2000)}")
        elif kind == 1:
            a, b = self.reg(), self.reg()
            op = rng.choice(_BINOPS)
            if rng.random() < 0.5:
                self.emit(f"{op}/2addr {a}, {b}")
            else:
                self.emit(f"{op} {self.write_target(in_branch)}, {a}, {b}")
        elif kind == 2:
            op = rng.choice(_LITOPS)
            lit = rng.randint(-128, 127) if "lit8" in op else rng.randint(-3000, 3000)
            if op == "shl-int/lit8":
                lit = rng.randint(0, 31)
            src = self.reg()
            self.emit(f"{op} {self.write_target(in_branch)}, {src}, {lit}")
        elif kind == 3:
            src = self.reg()
            self.emit(f"{rng.choice(_UNOPS)} {self.write_target(in_branch)}, {src}")
        elif kind == 4:
            self.emit("invoke-static {}, Lsyn/Gate;->T()I")
            self.emit(f"move-result {self.write_target(in_branch)}")
        else:
            self.emit(f"sget {self.write_target(in_branch)}, Lsyn/Gate;->k:I")

    def block(self, budget: int) -> None:
        """Emit roughly ``budget`` statements, possibly with forward branches."""
        end = self.count + budget
        while self.count < end and self.count < self.max_statements - 4:
            if self.conditionals_left and self.defined and self.rng.random() < 0.3:
                self.conditionals_left -= 1
                name = f"L{self.labels}"
                self.labels += 1
                if self.rng.random() < 0.5:
                    self.emit(f"{self.rng.choice(_IFZ)} {self.reg()}, :{name}")
                else:
                    self.emit(f"{self.rng.choice(_IF2)} {self.reg()}, {self.reg()}, :{name}")
                for _ in range(self.rng.randint(1, 3)):
                    self.simple(in_branch=True)
                self.lines.append(f"    :{name}")
            else:
                self.simple(in_branch=False)


def random_method(seed: int, max_statements: int = 30, max_conditionals: int = 3) -> SyntheticMethod:
    """A static method: integer noise, one literal, a decoder call fed by both, then a tail."""
    rng = random.Random(seed)
    while True:
        g = _Gen(rng, max_statements, max_conditionals)
        g.simple(in_branch=False)
        g.block(rng.randint(1, 8))
        g.emit(f'const-string {_STR_REG}, "{_escape(english_text(rng, 1, 4))}"')
        g.block(rng.randint(0, 8))
        if rng.random() < 0.3:
            g.emit(f"invoke-virtual {{{_STR_REG}}}, Ljava/lang/String;->trim()Ljava/lang/String;")
            g.emit(f"move-result-object {_STR_REG}")
        key = g.reg()
        g.emit(f"invoke-static {{{_STR_REG}, {key}}}, "
               "Lsyn/Gate;->f(Ljava/lang/String;I)Ljava/lang/String;")
        g.emit(f"move-result-object {_OUT_REG}")
        while g.count < max_statements - 3 and rng.random() < 0.6:
            g.simple(in_branch=False)
        g.emit("return-void")
        if g.count <= max_statements:
            break
    text = "\n".join([".class public final Lsyn/M;", ".super Ljava/lang/Object;", "",
                      ".method public static run()V", "    .locals 8", *g.lines, ".end method", ""])
    program = SmaliProgram()
    cls = parse_smali(text)
    program.classes[cls.descriptor] = cls
    support = parse_smali(_SYN_SUPPORT.format(tval=rng.randint(-3000, 3000)))
    program.classes[support.descriptor] = support
    method = cls.methods[0]
    lit = next(s.index for s in method.statements if s.opcode == "const-string")
    call = next(s.index for s in method.statements
                if s.method_ref is not None and s.method_ref.name == "f")
    return SyntheticMethod(program, method, lit, call, text)
