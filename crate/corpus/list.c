#include <stdio.h>
#include <stdlib.h>

struct node {
    int value;
    struct node *next;
};

struct node *node_new(int value) {
    struct node *n = malloc(sizeof(struct node));
    if (n == NULL) {
        return NULL;
    }
    n->value = value;
    n->next = NULL;
    return n;
}

struct node *list_push(struct node *head, int value) {
    struct node *n = node_new(value);
    if (n == NULL) {
        return head;
    }
    n->next = head;
    return n;
}

int list_length(const struct node *head) {
    int count = 0;
    while (head != NULL) {
        count++;
        head = head->next;
    }
    return count;
}

int list_sum(const struct node *head) {
    int total = 0;
    for (const struct node *n = head; n != NULL; n = n->next) {
        total += n->value;
    }
    return total;
}

struct node *list_reverse(struct node *head) {
    struct node *prev = NULL;
    while (head != NULL) {
        struct node *next = head->next;
        head->next = prev;
        prev = head;
        head = next;
    }
    return prev;
}

void list_free(struct node *head) {
    while (head != NULL) {
        struct node *next = head->next;
        free(head);
        head = next;
    }
}

void list_print(const struct node *head) {
    printf("[");
    for (const struct node *n = head; n != NULL; n = n->next) {
        printf("%d", n->value);
        if (n->next != NULL) {
            printf(", ");
        }
    }
    printf("]\n");
}

int main(void) {
    struct node *list = NULL;
    for (int i = 0; i < 10; i++) {
        list = list_push(list, i * i);
    }
    list = list_reverse(list);
    list_print(list);
    printf("length %d sum %d\n", list_length(list), list_sum(list));
    list_free(list);
    return 0;
}
