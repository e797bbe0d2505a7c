"""Auxiliary models: a paragraph text recognizer and a writer-ID CNN.

Both are pre-trained on rendered/genuine paragraphs, then frozen while the
autoencoder trains; the writer CNN additionally supplies the style vectors
used by ranked resampling. Both consume images in model range [-1, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

from .blocks import Downsample, ResBlock, group_norm
from .data.charset import Charset, PAD, START, END
from .encodings import Adaptive2DPositionalEncoding, sinusoidal_1d


@dataclass(frozen=True)
class HtrConfig:
    vocab_size: int
    base_channels: int = 16
    channel_mults: tuple[int, ...] = (1, 2, 4, 8)
    res_blocks: int = 1
    hidden: int = 128
    encoder_layers: int = 2
    decoder_layers: int = 4
    heads: int = 4
    dropout: float = 0.1
    label_smoothing: float = 0.4
    noisy_teacher: float = 0.3
    max_len: int = 192


class HtrModel(nn.Module):
    """Residual feature extractor + transformer encoder-decoder.

    The extractor downsamples by 8 in each dimension; the flattened feature
    map gets adaptive 2D positional encoding before the encoder, and the
    decoder runs autoregressively over charset tokens with START/END.
    """

    def __init__(self, config: HtrConfig):
        super().__init__()
        self.config = config
        widths = [config.base_channels * m for m in config.channel_mults]
        layers: list[nn.Module] = [nn.Conv2d(1, widths[0], 3, padding=1)]
        ch = widths[0]
        for i, w in enumerate(widths):
            for _ in range(config.res_blocks):
                layers.append(ResBlock(ch, w, dropout=config.dropout))
                ch = w
            if i < len(widths) - 1:
                layers.append(Downsample(ch))
        layers += [group_norm(ch), nn.SiLU(), nn.Conv2d(ch, config.hidden, 1)]
        self.features = nn.Sequential(*layers)
        self.feature_pe = Adaptive2DPositionalEncoding(config.hidden)

        enc_layer = nn.TransformerEncoderLayer(
            d_model=config.hidden,
            nhead=config.heads,
            dim_feedforward=4 * config.hidden,
            dropout=config.dropout,
            batch_first=True,
            norm_first=True,
        )
        self.encoder = nn.TransformerEncoder(enc_layer, num_layers=config.encoder_layers)
        dec_layer = nn.TransformerDecoderLayer(
            d_model=config.hidden,
            nhead=config.heads,
            dim_feedforward=4 * config.hidden,
            dropout=config.dropout,
            batch_first=True,
            norm_first=True,
        )
        self.decoder = nn.TransformerDecoder(dec_layer, num_layers=config.decoder_layers)
        self.token_embed = nn.Embedding(config.vocab_size, config.hidden)
        self.head = nn.Linear(config.hidden, config.vocab_size)

    def encode_image(self, image: torch.Tensor) -> torch.Tensor:
        feat = self.feature_pe(self.features(image))
        tokens = feat.flatten(2).transpose(1, 2)  # (B, h*w, hidden)
        return self.encoder(tokens)

    def decode_tokens(self, memory: torch.Tensor, token_in: torch.Tensor) -> torch.Tensor:
        """Teacher-forced logits for every input position, (B, L, vocab)."""
        emb = self.token_embed(token_in)
        emb = emb + sinusoidal_1d(
            emb.shape[1], emb.shape[2], dtype=emb.dtype, device=emb.device
        ).unsqueeze(0)
        mask = nn.Transformer.generate_square_subsequent_mask(
            token_in.shape[1], device=emb.device, dtype=emb.dtype
        )
        out = self.decoder(emb, memory, tgt_mask=mask)
        return self.head(out)

    def forward(self, image: torch.Tensor, token_in: torch.Tensor) -> torch.Tensor:
        return self.decode_tokens(self.encode_image(image), token_in)


def noisy_teacher(
    token_in: torch.Tensor, p: float, vocab_size: int, generator: torch.Generator | None = None
) -> torch.Tensor:
    """Replace teacher-forcing inputs with random charset tokens at rate p.

    START and PAD positions are left intact so sequence structure survives.
    """
    if p <= 0.0:
        return token_in
    corrupt = torch.rand(token_in.shape, generator=generator, device=token_in.device) < p
    corrupt &= (token_in != START) & (token_in != PAD)
    random_tokens = torch.randint(
        END + 1, vocab_size, token_in.shape, generator=generator, device=token_in.device
    )
    return torch.where(corrupt, random_tokens, token_in)


def htr_loss(
    model: HtrModel,
    image: torch.Tensor,
    target_tokens: torch.Tensor,
    noisy_teacher_p: float = 0.0,
    generator: torch.Generator | None = None,
) -> torch.Tensor:
    """Label-smoothed next-token cross-entropy with teacher forcing.

    ``target_tokens``: (B, L) = START + text + END, PAD-padded. PAD targets
    are ignored by the loss.
    """
    token_in = target_tokens[:, :-1]
    token_out = target_tokens[:, 1:]
    if noisy_teacher_p > 0.0:
        token_in = noisy_teacher(token_in, noisy_teacher_p, model.config.vocab_size, generator)
    logits = model(image, token_in)
    return F.cross_entropy(
        logits.reshape(-1, logits.shape[-1]),
        token_out.reshape(-1),
        ignore_index=PAD,
        label_smoothing=model.config.label_smoothing,
    )


@torch.no_grad()
def htr_decode(model: HtrModel, image: torch.Tensor, charset: Charset, max_len: int | None = None) -> list[str]:
    """Greedy autoregressive decoding; returns one string per batch image."""
    model.eval()
    max_len = max_len or model.config.max_len
    memory = model.encode_image(image)
    b = image.shape[0]
    tokens = torch.full((b, 1), START, dtype=torch.long, device=image.device)
    finished = torch.zeros(b, dtype=torch.bool, device=image.device)
    for _ in range(max_len):
        logits = model.decode_tokens(memory, tokens)
        nxt = logits[:, -1].argmax(dim=-1)
        nxt = torch.where(finished, torch.full_like(nxt, PAD), nxt)
        tokens = torch.cat([tokens, nxt.unsqueeze(1)], dim=1)
        finished |= nxt == END
        if bool(finished.all()):
            break
    out = []
    for row in tokens[:, 1:].tolist():
        if END in row:
            row = row[: row.index(END)]
        out.append(charset.decode(row))
    return out


@dataclass(frozen=True)
class WriterCnnConfig:
    num_writers: int
    canvas: tuple[int, int]
    base_channels: int = 16
    channel_mults: tuple[int, ...] = (1, 2, 4, 8, 8)
    res_blocks: int = 1
    hidden: int = 256
    dropout: float = 0.1
    label_smoothing: float = 0.1

    SPATIAL_FACTOR = 128

    @property
    def feature_shape(self) -> tuple[int, int]:
        h, w = self.canvas
        if h % self.SPATIAL_FACTOR or w % self.SPATIAL_FACTOR:
            raise ValueError(f"canvas must be divisible by {self.SPATIAL_FACTOR}, got {h}x{w}")
        return h // self.SPATIAL_FACTOR, w // self.SPATIAL_FACTOR


class WriterCnn(nn.Module):
    """Residual classifier over writers; total spatial downscale 128.

    The penultimate 256-d activation, L2-normalized, is the style vector
    used for ranking; the softmax head exists only for training.
    """

    def __init__(self, config: WriterCnnConfig):
        super().__init__()
        self.config = config
        fh, fw = config.feature_shape
        widths = [config.base_channels * m for m in config.channel_mults]
        layers: list[nn.Module] = [nn.Conv2d(1, widths[0], 3, stride=2, padding=1)]
        ch = widths[0]
        for w in widths:
            for _ in range(config.res_blocks):
                layers.append(ResBlock(ch, w, dropout=config.dropout))
                ch = w
            layers.append(Downsample(ch))
        layers += [group_norm(ch), nn.SiLU(), nn.Conv2d(ch, ch, 3, stride=2, padding=1)]
        self.features = nn.Sequential(*layers)
        self.hidden = nn.Linear(ch * fh * fw, config.hidden)
        self.head = nn.Linear(config.hidden, config.num_writers)

    def embed(self, image: torch.Tensor) -> torch.Tensor:
        feat = self.features(image).flatten(1)
        return torch.tanh(self.hidden(feat))

    def forward(self, image: torch.Tensor) -> torch.Tensor:
        return self.head(self.embed(image))

    @torch.no_grad()
    def style_vector(self, image: torch.Tensor) -> torch.Tensor:
        """(B, hidden) unit-normalized penultimate embeddings."""
        self.eval()
        return F.normalize(self.embed(image), dim=1)


def writer_logits(model: WriterCnn, image: torch.Tensor) -> torch.Tensor:
    """Posterior over writers, rows summing to 1."""
    with torch.no_grad():
        model.eval()
        return F.softmax(model(image), dim=1)


def writer_loss(model: WriterCnn, image: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    return F.cross_entropy(model(image), labels, label_smoothing=model.config.label_smoothing)
