"""One-time-pad encryption, secret sharing, and key exchange as cell equations.

An encryption scheme here is a triple: an encryption relation from
(plaintext, key) pairs to ciphertexts, a decryption operation controlled by
the public ciphertext, and a pad creation step (a duality cup on the key
set) that nondeterministically hands matching keys to the two parties.
Correctness and the security properties are equations between composite
two-cells; each checker builds both sides concretely and compares them bit
for bit, reporting a located witness on failure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from relcat.cells import (
    CellDifference,
    OneCell,
    TwoCell,
    equal,
    hcompose_one,
    hcompose_two,
    identity_one_cell,
    identity_two_cell,
    scalar_one_cell,
    scalar_two_cell,
    tensor,
    tensor_many,
    vcompose,
    vcompose_many,
)
from relcat.generators import (
    ControlledOp,
    DualityPair,
    canonical_cup,
    controlled_at_left_boundary,
    controlled_scalar,
    controlled_scalar_mirror,
    create_cell,
    cup_cell,
    delete_cell,
    region_structure,
    swap_cell,
    wire_cell,
)
from relcat.relations import (
    FiniteSet,
    Permutation,
    Rel,
    all_relations,
    as_finite_set,
    compose,
    identity,
    make,
    predicates,
    product,
    product_set,
)

__all__ = [
    "DHInstance",
    "EquationVerdict",
    "ImplicationReport",
    "PreconditionError",
    "ProtocolInstance",
    "SECURITY_PROPERTIES",
    "SecretSharingInstance",
    "SecretSharingResult",
    "check_correctness",
    "check_correctness_protocol_form",
    "check_dh",
    "check_encryption_not_invertible",
    "check_security",
    "derive_decryption_inverse",
    "dh_instance",
    "group_instance",
    "rebuild_encryption",
    "secret_sharing_from_otp",
    "security_implications",
    "single_bit_instance",
]


class PreconditionError(RuntimeError):
    """A check was invoked on an instance that fails its precondition."""


@dataclass(frozen=True)
class EquationVerdict:
    name: str
    holds: bool
    witness: Optional[str] = None
    difference: Optional[CellDifference] = None

    def __post_init__(self) -> None:
        assert (self.witness is None) == self.holds


def _verdict(name: str, lhs: TwoCell, rhs: TwoCell) -> EquationVerdict:
    res = equal(lhs, rhs)
    if res.equal:
        return EquationVerdict(name, True)
    return EquationVerdict(name, False, res.difference.describe(), res.difference)


@dataclass(frozen=True)
class ProtocolInstance:
    """An encrypted-communication scheme over finite carriers."""

    plaintexts: FiniteSet
    keys: FiniteSet
    ciphertexts: FiniteSet
    encrypt: Rel  # plaintexts x keys -> ciphertexts
    decrypt: ControlledOp  # public ciphertext, private keys -> plaintexts
    pad: DualityPair  # on the key set

    def __post_init__(self) -> None:
        if self.encrypt.src.size != self.plaintexts.size * self.keys.size:
            raise ValueError("encryption source is not plaintexts x keys")
        if self.encrypt.dst.size != self.ciphertexts.size:
            raise ValueError("encryption target is not the ciphertext set")
        if self.decrypt.public_carrier.size != self.ciphertexts.size:
            raise ValueError("decryption is not controlled by the ciphertext")
        if (
            self.decrypt.in_private.size != self.keys.size
            or self.decrypt.out_private.size != self.plaintexts.size
        ):
            raise ValueError("decryption must take keys to plaintexts")
        if self.pad.carrier.size != self.keys.size:
            raise ValueError("pad creation must live on the key set")


def _labeled(prefix: str, n: int) -> FiniteSet:
    return FiniteSet(n, tuple(f"{prefix}{i}" for i in range(n)))


def single_bit_instance() -> ProtocolInstance:
    """The simplest nontrivial scheme: one-time pad on a single bit.

    Transcribed literally: encryption is addition in the two-element group,
    decryption applies the identity or the bit flip depending on the public
    ciphertext, and the pad cup creates the key pairs (0,0) and (1,1).
    """
    p, k, c = _labeled("p", 2), _labeled("k", 2), _labeled("c", 2)
    encrypt = make(product_set(p, k), c, [(0, 0), (1, 1), (2, 1), (3, 0)])
    decrypt = ControlledOp(
        c, k, p, (make(k, p, [(0, 0), (1, 1)]), make(k, p, [(0, 1), (1, 0)]))
    )
    pad = DualityPair(
        k,
        make(FiniteSet(1), product_set(k, k), [(0, 0), (0, 3)]),
        make(product_set(k, k), FiniteSet(1), [(0, 0), (3, 0)]),
    )
    return ProtocolInstance(p, k, c, encrypt, decrypt, pad)


def group_instance(n: int) -> ProtocolInstance:
    """Modular-addition one-time pad on n symbols."""
    if n < 1:
        raise ValueError(f"carrier size must be at least 1, got {n}")
    p, k, c = _labeled("p", n), _labeled("k", n), _labeled("c", n)
    encrypt = make(
        product_set(p, k),
        c,
        [(i * n + j, (i + j) % n) for i in range(n) for j in range(n)],
    )
    decrypt = ControlledOp(
        c,
        k,
        p,
        tuple(
            make(k, p, [(j, (i - j) % n) for j in range(n)]) for i in range(n)
        ),
    )
    return ProtocolInstance(p, k, c, encrypt, decrypt, canonical_cup(k))


# ---------------------------------------------------------------------------
# Cell presentations of the instance pieces.
# ---------------------------------------------------------------------------


def _enc_cell(inst: ProtocolInstance) -> TwoCell:
    """Encryption as a scalar two-cell on wires."""
    return scalar_two_cell(inst.encrypt)


def _enc_published_split(inst: ProtocolInstance) -> TwoCell:
    """Encryption followed by publication, with the input wires presented
    as separate factors (key to the right of the plaintext) and the output
    presented as a region bubble."""
    rs = region_structure(inst.ciphertexts)
    dom = hcompose_one(
        scalar_one_cell(inst.keys), scalar_one_cell(inst.plaintexts)
    )
    bubble = hcompose_one(rs.boundary_left, rs.boundary_right)
    return TwoCell(dom, bubble, ((inst.encrypt,),))


def _cup_split(pad: DualityPair) -> TwoCell:
    """Pad creation with the two legs presented as separate wire factors."""
    k = pad.carrier
    cod = hcompose_one(scalar_one_cell(k), scalar_one_cell(k))
    return TwoCell(identity_one_cell(FiniteSet(1)), cod, ((pad.cup,),))


def _cap_split(pad: DualityPair) -> TwoCell:
    k = pad.carrier
    dom = hcompose_one(scalar_one_cell(k), scalar_one_cell(k))
    return TwoCell(dom, identity_one_cell(FiniteSet(1)), ((pad.cap,),))


# ---------------------------------------------------------------------------
# Correctness.
# ---------------------------------------------------------------------------


def check_correctness(inst: ProtocolInstance) -> EquationVerdict:
    """Compact correctness equation.

    Left side: create the pad, encrypt with one key, publish, then decrypt
    the other key under the published value.  Right side: create a fresh
    public value and hand the plaintext over unchanged.
    """
    rs = region_structure(inst.ciphertexts)
    p_wire, k_wire = wire_cell(inst.plaintexts), wire_cell(inst.keys)
    lhs = vcompose_many(
        tensor(p_wire, cup_cell(inst.pad)),
        tensor(_enc_cell(inst), k_wire),
        tensor(rs.publish, k_wire),
        controlled_scalar(inst.decrypt),
    )
    rhs = tensor(rs.create_region, p_wire)
    return _verdict("correctness", lhs, rhs)


def check_correctness_protocol_form(inst: ProtocolInstance) -> EquationVerdict:
    """Correctness in its communication-shaped layering.

    Same equation, built differently: the sender's encrypt-and-publish is
    one box, the public value then travels to the receiver through an
    explicit do-nothing step, and decryption is whiskered against the
    region boundaries directly.
    """
    rs = region_structure(inst.ciphertexts)
    p_wire, k_wire = wire_cell(inst.plaintexts), wire_cell(inst.keys)
    sender = tensor(vcompose(_enc_cell(inst), rs.publish), k_wire)
    first_half = vcompose(tensor(p_wire, cup_cell(inst.pad)), sender)
    transit = identity_two_cell(first_half.codomain)
    receive = hcompose_two(
        controlled_at_left_boundary(inst.decrypt),
        identity_two_cell(rs.boundary_right),
    )
    lhs = vcompose_many(first_half, transit, receive)
    rhs_core = tensor(rs.create_region, p_wire)
    rhs = vcompose(rhs_core, identity_two_cell(rhs_core.codomain))
    return _verdict("correctness_protocol_form", lhs, rhs)


# ---------------------------------------------------------------------------
# Security properties.
# ---------------------------------------------------------------------------

SECURITY_PROPERTIES = {
    "S1": "deleting the unused pad key leaves a random public value",
    "S2": "encrypting with a random key leaves a random public value",
    "S3": "encrypting a random message leaves a random public value",
    "S4": "decrypting with a random key can produce any message",
}


def check_security(inst: ProtocolInstance, which: str) -> EquationVerdict:
    builders = {
        "S1": _security_key_deleted,
        "S2": _security_random_key,
        "S3": _security_random_message,
        "S4": _security_keyless_attacker,
    }
    if which not in builders:
        raise ValueError(f"unknown security property {which!r}")
    return builders[which](inst)


def _security_key_deleted(inst: ProtocolInstance) -> EquationVerdict:
    rs = region_structure(inst.ciphertexts)
    p_wire, k_wire = wire_cell(inst.plaintexts), wire_cell(inst.keys)
    bubble_id = identity_two_cell(
        hcompose_one(rs.boundary_left, rs.boundary_right)
    )
    lhs = vcompose_many(
        tensor(p_wire, cup_cell(inst.pad)),
        tensor(_enc_cell(inst), k_wire),
        tensor(rs.publish, k_wire),
        tensor(bubble_id, delete_cell(inst.keys)),
    )
    rhs = vcompose(delete_cell(inst.plaintexts), rs.create_region)
    return _verdict("S1", lhs, rhs)


def _security_random_key(inst: ProtocolInstance) -> EquationVerdict:
    rs = region_structure(inst.ciphertexts)
    lhs = vcompose_many(
        tensor(wire_cell(inst.plaintexts), create_cell(inst.keys)),
        _enc_cell(inst),
        rs.publish,
    )
    rhs = vcompose(delete_cell(inst.plaintexts), rs.create_region)
    return _verdict("S2", lhs, rhs)


def _security_random_message(inst: ProtocolInstance) -> EquationVerdict:
    rs = region_structure(inst.ciphertexts)
    lhs = vcompose_many(
        tensor(create_cell(inst.plaintexts), wire_cell(inst.keys)),
        _enc_cell(inst),
        rs.publish,
    )
    rhs = vcompose(delete_cell(inst.keys), rs.create_region)
    return _verdict("S3", lhs, rhs)


def _security_keyless_attacker(inst: ProtocolInstance) -> EquationVerdict:
    """With the key chosen blindly, decryption can yield every plaintext,
    whatever the public value says: checked per region value."""
    rs = region_structure(inst.ciphertexts)
    id_bl = identity_two_cell(rs.boundary_left)
    lhs = vcompose(
        hcompose_two(create_cell(inst.keys), id_bl),
        controlled_at_left_boundary(inst.decrypt),
    )
    rhs = hcompose_two(create_cell(inst.plaintexts), id_bl)
    return _verdict("S4", lhs, rhs)


@dataclass(frozen=True)
class ImplicationReport:
    s1: EquationVerdict
    s2: EquationVerdict
    s3: EquationVerdict
    s4: EquationVerdict
    vacuous: bool
    implication_holds: bool


def security_implications(inst: ProtocolInstance) -> ImplicationReport:
    """Evaluate S1 through S4 independently and test that S1 forces the rest."""
    s1 = check_security(inst, "S1")
    s2 = check_security(inst, "S2")
    s3 = check_security(inst, "S3")
    s4 = check_security(inst, "S4")
    vacuous = not s1.holds
    implication = vacuous or (s2.holds and s3.holds and s4.holds)
    return ImplicationReport(s1, s2, s3, s4, vacuous, implication)


# ---------------------------------------------------------------------------
# Invertibility of the two halves.
# ---------------------------------------------------------------------------


def derive_decryption_inverse(
    inst: ProtocolInstance,
) -> tuple[TwoCell, EquationVerdict]:
    """Build the decryption inverse out of the encryption relation.

    The wiring: alongside the ambient public region, create a fresh pad,
    encrypt the incoming plaintext with one leg and publish, compare the
    published value against the ambient one (halting on mismatch), and
    return the surviving pad leg.  The result is verified to be a two-sided
    inverse of the decryption boundary cell, and every decryption fiber is
    required to be a bijection.
    """
    correctness = check_correctness(inst)
    if not correctness.holds:
        raise PreconditionError(
            f"decryption inverse requires correctness; {correctness.witness}"
        )
    rs = region_structure(inst.ciphertexts)
    id_bl = identity_two_cell(rs.boundary_left)
    k_wire = wire_cell(inst.keys)

    dom = hcompose_one(scalar_one_cell(inst.plaintexts), rs.boundary_left)
    step1 = hcompose_two(_cup_split(inst.pad), identity_two_cell(dom))
    step2 = hcompose_two(
        hcompose_two(k_wire, _enc_published_split(inst)), id_bl
    )
    keep = identity_two_cell(
        hcompose_one(scalar_one_cell(inst.keys), rs.boundary_left)
    )
    step3 = hcompose_two(keep, rs.compare)
    dinv = vcompose_many(step1, step2, step3)

    dec = controlled_at_left_boundary(inst.decrypt)
    left = _verdict(
        "decrypt_then_inverse", vcompose(dec, dinv), identity_two_cell(dec.domain)
    )
    right = _verdict(
        "inverse_then_decrypt", vcompose(dinv, dec), identity_two_cell(dinv.domain)
    )
    fibers_bijective = all(
        predicates(f).is_bijection for f in inst.decrypt.family
    )
    holds = left.holds and right.holds and fibers_bijective
    if holds:
        verdict = EquationVerdict("decryption_invertible", True)
    else:
        reasons = [
            v.witness for v in (left, right) if not v.holds and v.witness
        ]
        if not fibers_bijective:
            reasons.append("a decryption fiber is not a bijection")
        verdict = EquationVerdict(
            "decryption_invertible", False, "; ".join(reasons) or "failed"
        )
    return dinv, verdict


def rebuild_encryption(inst: ProtocolInstance) -> EquationVerdict:
    """Reassemble encryption from the decryption inverse.

    Create a fresh public value, run the inverse on the plaintext against
    it, and verify the resulting key against the incoming key wire; what
    survives is exactly encrypt-then-publish.
    """
    dinv, inv_verdict = derive_decryption_inverse(inst)
    if not inv_verdict.holds:
        raise PreconditionError(
            f"reconstruction requires an invertible decryption; "
            f"{inv_verdict.witness}"
        )
    return rebuild_encryption_from(inst, dinv)


def rebuild_encryption_from(
    inst: ProtocolInstance, dinv: TwoCell
) -> EquationVerdict:
    """The reconstruction comparison against a supplied inverse cell."""
    rs = region_structure(inst.ciphertexts)
    k_wire = wire_cell(inst.keys)
    pk_cell = identity_two_cell(
        hcompose_one(
            scalar_one_cell(inst.keys), scalar_one_cell(inst.plaintexts)
        )
    )
    bubble = hcompose_one(rs.boundary_left, rs.boundary_right)

    step1 = hcompose_two(pk_cell, rs.create_region)
    dinv_scalar = hcompose_two(dinv, identity_two_cell(rs.boundary_right))
    step2 = hcompose_two(k_wire, dinv_scalar)
    step3 = hcompose_two(_cap_split(inst.pad), identity_two_cell(bubble))
    rebuilt = vcompose_many(step1, step2, step3)

    target = TwoCell(pk_cell.domain, bubble, ((inst.encrypt,),))
    return _verdict("encryption_rebuilt_from_inverse", rebuilt, target)


def _two_sided_inverse_exists(e: Rel) -> bool:
    """Exhaustive search for a relational two-sided inverse.

    Small candidate spaces are searched literally.  Larger ones are pruned
    by conditions forced by the identity equations: the relation must be
    total and surjective, and any inverse is contained in the pairs whose
    preimage and image are single points; the survivors are then verified
    exactly.
    """
    id_src, id_dst = identity(e.src), identity(e.dst)
    if e.src.size * e.dst.size <= 16:
        return any(
            compose(e, r) == id_src and compose(r, e) == id_dst
            for r in all_relations(e.dst, e.src)
        )
    if not (e.bits.any(axis=0).all() and e.bits.any(axis=1).all()):
        return False
    allowed = []
    for c in range(e.dst.size):
        preim = np.flatnonzero(e.bits[c, :])
        if len(preim) != 1:
            continue
        a = int(preim[0])
        if e.bits[:, a].sum() == 1:
            allowed.append((c, a))
    for mask in range(1 << len(allowed)):
        pairs = [allowed[i] for i in range(len(allowed)) if mask >> i & 1]
        r = make(e.dst, e.src, pairs)
        if compose(e, r) == id_src and compose(r, e) == id_dst:
            return True
    return False


def check_encryption_not_invertible(inst: ProtocolInstance) -> EquationVerdict:
    """Encryption admits no relational inverse unless messages are trivial."""
    s1 = check_security(inst, "S1")
    if not s1.holds:
        raise PreconditionError(
            "non-invertibility is asserted under the key-deletion property; "
            f"{s1.witness}"
        )
    trivial = inst.plaintexts.size <= 1
    invertible = _two_sided_inverse_exists(inst.encrypt)
    no_inverse = not invertible
    # exactly one of the two: a trivial message space is the only way to
    # be invertible, and a nontrivial one never is
    holds = trivial != no_inverse
    if holds:
        return EquationVerdict("encryption_not_invertible", True)
    if trivial and no_inverse:
        witness = "message space is trivial yet no inverse was found"
    else:
        witness = "encryption has a two-sided inverse on a nontrivial message space"
    return EquationVerdict("encryption_not_invertible", False, witness)


# ---------------------------------------------------------------------------
# Secret sharing.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SecretSharingInstance:
    message_set: FiniteSet
    share_pad: DualityPair
    share_decrypt: ControlledOp
    recombine: Rel


@dataclass(frozen=True)
class SecretSharingResult:
    instance: SecretSharingInstance
    recombination: EquationVerdict
    erase_left_share: EquationVerdict
    erase_right_share: EquationVerdict


def secret_sharing_from_otp(inst: ProtocolInstance) -> SecretSharingResult:
    """Read the encryption scheme as a two-share secret sharing procedure.

    A pre-existing public message controls the decryption of one pad leg;
    the two resulting private values are the shares, and the recombination
    step publishes them back through the encryption relation.  Correctness
    is the requirement that this copies the original public message; the
    security equations say that erasing either share makes the other
    uniformly random.
    """
    correctness = check_correctness(inst)
    if not correctness.holds:
        raise PreconditionError(
            f"secret sharing is derived from a correct scheme; "
            f"{correctness.witness}"
        )
    sharing = SecretSharingInstance(
        inst.ciphertexts, inst.pad, inst.decrypt, inst.encrypt
    )
    rs = region_structure(inst.ciphertexts)
    id_bl = identity_two_cell(rs.boundary_left)
    k_wire = wire_cell(inst.keys)

    prepare = hcompose_two(_cup_split(inst.pad), id_bl)
    adjust = hcompose_two(
        k_wire, controlled_at_left_boundary(inst.decrypt)
    )
    combine = hcompose_two(_enc_published_split(inst), id_bl)
    lhs = vcompose_many(prepare, adjust, combine)
    rhs = hcompose_two(id_bl, rs.copy)
    recombination = _verdict("sharing_recombination", lhs, rhs)

    after_adjust = vcompose(prepare, adjust)
    p_bl = identity_two_cell(
        hcompose_one(scalar_one_cell(inst.plaintexts), rs.boundary_left)
    )
    erase_right = vcompose(
        after_adjust, hcompose_two(delete_cell(inst.keys), p_bl)
    )
    rhs_right = hcompose_two(create_cell(inst.plaintexts), id_bl)
    erase_right_share = _verdict(
        "sharing_erase_right_share", erase_right, rhs_right
    )

    erase_left = vcompose(
        after_adjust,
        hcompose_two(
            k_wire, hcompose_two(delete_cell(inst.plaintexts), id_bl)
        ),
    )
    rhs_left = hcompose_two(create_cell(inst.keys), id_bl)
    erase_left_share = _verdict("sharing_erase_left_share", erase_left, rhs_left)

    return SecretSharingResult(
        sharing, recombination, erase_left_share, erase_right_share
    )


# ---------------------------------------------------------------------------
# Key exchange.
# ---------------------------------------------------------------------------


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % d for d in range(2, int(n**0.5) + 1))


@dataclass(frozen=True)
class DHInstance:
    """Key exchange over a cyclic group of prime order.

    Group elements are powers of a generator; exponents are the private
    keys.  The controlled operation raises a public base element to a
    private exponent.
    """

    group_order: int
    elements: FiniteSet
    exponents: FiniteSet
    exp_op: ControlledOp
    base_set: tuple[int, ...]

    def __post_init__(self) -> None:
        if not _is_prime(self.group_order):
            raise ValueError(f"group order must be prime, got {self.group_order}")


def dh_instance(q: int, include_identity: bool = False) -> DHInstance:
    if not _is_prime(q):
        raise ValueError(f"group order must be prime, got {q}")
    elements = FiniteSet(
        q, tuple("1" if i == 0 else "g" if i == 1 else f"g^{i}" for i in range(q))
    )
    exponents = FiniteSet(q, tuple(str(i) for i in range(q)))
    family = tuple(
        make(exponents, elements, [(x, (a * x) % q) for x in range(q)])
        for a in range(q)
    )
    exp_op = ControlledOp(elements, exponents, elements, family)
    base_set = tuple(range(q)) if include_identity else tuple(range(1, q))
    return DHInstance(q, elements, exponents, exp_op, base_set)


class _AmbientRun:
    """A composite built layer by layer inside one ambient public region.

    The running cell goes from the region identity to the region with a
    scalar zone of wires and bubbles between its boundaries.  Region
    boundaries have singleton fibers, so each zone layer acts on component
    (t, s) either as itself or as the member of a controlled family chosen
    by the ambient value at the relevant boundary; layers are composed
    per component without materializing whiskered cells.
    """

    def __init__(self, rs) -> None:
        self.rs = rs
        g = rs.carrier
        self.zone = identity_one_cell(FiniteSet(1))
        self.components = [
            [rs.copy.component(t, s) for s in range(g.size)] for t in range(g.size)
        ]

    def _apply(self, rel_for) -> None:
        g = self.rs.carrier
        self.components = [
            [
                compose(self.components[t][s], rel_for(t, s))
                for s in range(g.size)
            ]
            for t in range(g.size)
        ]

    def apply_scalar(self, step: TwoCell) -> None:
        if step.domain.fiber(0, 0).size != self.zone.fiber(0, 0).size:
            raise ValueError("zone layer does not match the current zone")
        rel = step.scalar()
        self._apply(lambda t, s: rel)
        self.zone = step.codomain

    def apply_family_at_left_boundary(self, zone_family: list[Rel]) -> None:
        self._apply(lambda t, s: zone_family[t])
        self.zone = scalar_one_cell(zone_family[0].dst)

    def apply_family_at_right_boundary(self, zone_family: list[Rel]) -> None:
        self._apply(lambda t, s: zone_family[s])
        self.zone = scalar_one_cell(zone_family[0].dst)

    def cell(self) -> TwoCell:
        g = self.rs.carrier
        codomain = hcompose_one(
            hcompose_one(self.rs.boundary_right, self.zone),
            self.rs.boundary_left,
        )
        return TwoCell(
            identity_one_cell(g),
            codomain,
            tuple(tuple(row) for row in self.components),
        )


def _dh_sides(
    dh: DHInstance, erase_published: bool
) -> tuple[TwoCell, TwoCell]:
    g, z = dh.elements, dh.exponents
    rs = region_structure(g)
    fam = dh.exp_op.family
    g_wire, z_wire = wire_cell(g), wire_cell(z)
    pad = cup_cell(canonical_cup(z))

    run = _AmbientRun(rs)
    # both parties draw and duplicate a private exponent
    run.apply_scalar(tensor(pad, pad))
    # sender's exponentiation against the ambient base at the left boundary
    id_rest = identity(product_set(z, product_set(z, z)))
    run.apply_family_at_left_boundary([product(f, id_rest) for f in fam])
    run.apply_scalar(tensor_many(rs.publish, z_wire, z_wire, z_wire))
    # receiver's exponentiation against the ambient base at the right boundary
    id_pre = identity(product_set(g, product_set(z, z)))
    run.apply_family_at_right_boundary([product(id_pre, f) for f in fam])
    run.apply_scalar(tensor_many(g_wire, z_wire, z_wire, rs.publish))
    # the sender's published value travels across the first kept exponent
    run.apply_scalar(tensor_many(swap_cell(g, z), z_wire, g_wire))
    # receiver raises the received value to the kept exponent
    run.apply_scalar(
        tensor_many(z_wire, controlled_scalar(dh.exp_op), g_wire)
    )
    if erase_published:
        run.apply_scalar(
            tensor_many(z_wire, rs.delete_region, g_wire, g_wire)
        )
        run.apply_scalar(tensor_many(z_wire, swap_cell(g, g)))
        run.apply_scalar(
            tensor(controlled_scalar_mirror(dh.exp_op), g_wire)
        )
        run.apply_scalar(tensor_many(g_wire, rs.delete_region, g_wire))
    else:
        run.apply_scalar(tensor_many(z_wire, g_wire, swap_cell(g, g)))
        run.apply_scalar(tensor_many(z_wire, swap_cell(g, g), g_wire))
        run.apply_scalar(
            tensor_many(controlled_scalar_mirror(dh.exp_op), g_wire, g_wire)
        )
    lhs = run.cell()

    rhs_run = _AmbientRun(rs)
    rhs_run.apply_scalar(cup_cell(canonical_cup(g)))
    rhs = rhs_run.cell()
    return lhs, rhs


def check_dh(dh: DHInstance, erase_published: bool = True) -> EquationVerdict:
    """Key exchange correctness, compared base by base.

    For every admissible base, running the exchange and erasing the
    published values must equal the base's region unchanged beside a
    matched, uniformly random pair of group elements.
    """
    lhs, rhs = _dh_sides(dh, erase_published)
    if lhs.codomain.fiber(0, 0).size != rhs.codomain.fiber(0, 0).size:
        bases = ", ".join(dh.elements.label(b) for b in dh.base_set)
        return EquationVerdict(
            "key_exchange",
            False,
            f"published data retained: sides have different shapes (bases {bases})",
        )
    for b in dh.base_set:
        if lhs.component(b, b) != rhs.component(b, b):
            return EquationVerdict(
                "key_exchange",
                False,
                f"base {dh.elements.label(b)}: exchanged keys are not "
                f"uniform over the group",
            )
    return EquationVerdict("key_exchange", True)
