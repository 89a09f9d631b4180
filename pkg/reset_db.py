"""
Reset the run ledger: drop and recreate its tables.

Uses QICT_DATABASE_URL (from the environment or .env).
"""
from qict.db.base import Base
from qict.db.session import engine
from qict.ledger import create_tables


def reset_database():
    """Drop all ledger tables and recreate them empty"""
    if engine is None:
        print("QICT_DATABASE_URL is not set; nothing to reset")
        return

    print("Resetting run ledger...")
    Base.metadata.drop_all(bind=engine)
    print("✓ Dropped all tables")

    create_tables(engine)
    print("✓ Created all tables")
    print("\n✅ Run ledger reset complete!")


if __name__ == "__main__":
    reset_database()
