import java.util.ArrayList;
import java.util.List;

public class Account {
    private final String owner;
    private long balance;
    private final List<String> history = new ArrayList<>();

    public Account(String owner, long initial) {
        if (initial < 0) {
            throw new IllegalArgumentException("negative initial balance");
        }
        this.owner = owner;
        this.balance = initial;
        history.add("open " + initial);
    }

    public String getOwner() {
        return owner;
    }

    public long getBalance() {
        return balance;
    }

    public void deposit(long amount) {
        if (amount <= 0) {
            throw new IllegalArgumentException("deposit must be positive");
        }
        balance += amount;
        history.add("deposit " + amount);
    }

    public boolean withdraw(long amount) {
        if (amount <= 0 || amount > balance) {
            history.add("rejected " + amount);
            return false;
        }
        balance -= amount;
        history.add("withdraw " + amount);
        return true;
    }

    public boolean transferTo(Account other, long amount) {
        if (!withdraw(amount)) {
            return false;
        }
        other.deposit(amount);
        history.add("transfer " + amount + " to " + other.getOwner());
        return true;
    }

    public List<String> getHistory() {
        return new ArrayList<>(history);
    }

    @Override
    public String toString() {
        return owner + ": " + balance;
    }
}
