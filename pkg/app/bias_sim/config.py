from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, model_validator


class SimConfig(BaseModel):
    """Synthetic marketplace knobs. Click-dataset filter defaults: CTR >= 0.05, >= 30 impressions, >= 1 click."""

    model_config = ConfigDict(extra="forbid")

    n_items: int = Field(default=400, ge=1)
    n_keyphrases: int = Field(default=120, ge=2)
    n_topics: int = Field(default=6, ge=2)
    tokens_per_topic: int = Field(default=16, ge=4)
    synonym_rate: float = Field(default=0.3, ge=0.0, le=1.0)
    single_token_rate: float = Field(default=0.4, ge=0.0, le=1.0)
    secondary_tokens: int = Field(default=2, ge=0)
    title_len_min: int = Field(default=5, ge=2)
    title_len_max: int = Field(default=8, ge=2)
    noise_token_rate: float = Field(default=0.5, ge=0.0, le=1.0)

    search_noise: float = Field(default=0.1, ge=0.0, le=1.0)
    position_decay: float = Field(default=0.7, gt=0.0, le=1.0)
    base_click_prob: float = Field(default=0.3, gt=0.0, lt=1.0)
    irrelevant_click_floor: float = Field(default=0.02, ge=0.0, le=1.0)
    sales_rate: float = Field(default=0.2, ge=0.0, le=1.0)
    impressions_per_auction: int = Field(default=10, ge=1)
    auctions_per_keyphrase: int = Field(default=30, ge=1)
    srp_slots: int = Field(default=8, ge=1)
    zipf_exponent: float = Field(default=1.2, ge=0.0)
    head_fraction: float = Field(default=0.1, gt=0.0, le=1.0)

    candidates_dominant: int = Field(default=8, ge=0)
    candidates_secondary: int = Field(default=4, ge=0)
    candidates_random: int = Field(default=2, ge=0)

    min_impressions: int = Field(default=30, ge=1)
    min_ctr: float = Field(default=0.05, ge=0.0, le=1.0)
    min_clicks: int = Field(default=1, ge=0)

    judgment_sample_size: int = Field(default=0, ge=0)  # 0 -> every advertised pair
    judgment_topic_floor: int = Field(default=20, ge=0)
    eval_fraction: float = Field(default=0.2, gt=0.0, lt=1.0)

    seed: int = 0

    @model_validator(mode="after")
    def _check_ranges(self) -> "SimConfig":
        if self.title_len_max < self.title_len_min:
            raise ValueError("title_len_max must be >= title_len_min")
        if 2 * self.secondary_tokens >= self.title_len_min:
            raise ValueError("dominant-topic tokens must outnumber secondary_tokens in every title")
        if self.secondary_tokens >= self.tokens_per_topic:
            raise ValueError("secondary_tokens must be < tokens_per_topic")
        if self.n_keyphrases < self.n_topics:
            raise ValueError("n_keyphrases must be >= n_topics so every topic has keyphrases")
        return self
